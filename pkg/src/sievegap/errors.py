"""Exception hierarchy."""


class SievegapError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class DomainError(SievegapError):
    """Invalid argument for an operation (non-prime modulus, bad range...)."""


class DegenerateSystemError(SievegapError):
    """A prime sieves out every residue class; sifting cannot proceed."""

    def __init__(self, p: int):
        super().__init__(f"sieving system is degenerate at p={p}")
        self.prime = p


class EnumerationLimitError(SievegapError):
    """An exact enumeration would exceed its configured size guard."""
