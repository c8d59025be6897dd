"""slicegcn: vulnerable C/C++ slice detection with a word-slice text graph
and a from-scratch graph convolutional classifier."""

__version__ = "0.1.0"

from .corpus import Corpus, SliceRecord, corpus_stats, parse_gadget_file, split_corpus
from .errors import DataError, DivergenceError, LexError, SliceGcnError

__all__ = [
    "Corpus",
    "SliceRecord",
    "corpus_stats",
    "parse_gadget_file",
    "split_corpus",
    "DataError",
    "DivergenceError",
    "LexError",
    "SliceGcnError",
    "__version__",
]
