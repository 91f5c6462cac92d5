"""Tweet emotion intensity regression with an attention-augmented BiLSTM."""

__version__ = "0.1.0"
