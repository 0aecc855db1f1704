class ExportError(Exception):
    """Base class for exporter failures."""


class UnknownModel(ExportError):
    """Requested model name is not in the registry."""


class NoImages(ExportError):
    """The input folder yielded no readable images."""


class BadSpec(ExportError):
    """Invalid export specification (size, taps, ...)."""


class BadMagic(ExportError):
    """LCF file does not start with the expected magic/version."""


class Truncated(ExportError):
    """LCF file is shorter than its header promises."""
