"""rosetta-pd: benchmark translation, repair, and F2F 3D enablement toolkit."""

__version__ = "0.1.0"

GENERATOR_COMMENT = f"generated-by rosetta-pd {__version__}"
