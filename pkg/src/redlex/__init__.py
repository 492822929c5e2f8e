"""redlex: LLM-assisted topic lexicon construction and Reddit dump corpus analytics."""

__version__ = "0.1.0"
