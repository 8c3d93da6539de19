from .version import __version__

VERSION = __version__
__name__ = "contactrom"
