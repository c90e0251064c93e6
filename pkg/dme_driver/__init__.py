"""Decision-logic-conditioned trajectory planning on synthetic BEV scenes."""

__version__ = "0.1.0"
