"""Sub-layer contextualization probe for BERT-style encoders."""

from ._sublens import (
    Corpus,
    CorpusError,
    DegenerateVectorError,
    DimensionalityMismatchError,
    IndexError,
    LoadError,
    Model,
    ShapeError,
    SublensError,
    Vocab,
    __version__,
    builtin_corpus,
    cosine,
    encode_sentence,
    load_corpus,
    load_weights,
    pca_2,
    run_cli,
    target_span,
)


def main(argv=None):
    import sys

    return run_cli(sys.argv[1:] if argv is None else list(argv))
