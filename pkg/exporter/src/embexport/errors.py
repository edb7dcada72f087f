"""Error taxonomy for the exporter."""


class EncoderError(Exception):
    """Encoder could not be loaded or is misconfigured."""


class DataError(Exception):
    """Input utterance file is empty, malformed, or inconsistent."""
