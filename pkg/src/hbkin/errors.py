"""Error type shared by all modules."""


class KineticsError(Exception):
    """Exception carrying a short machine-readable code.

    Codes in use: "not-hermitian", "not-psd", "bad-regulator",
    "grid-mismatch", "bad-radius", "bad-schedule", "dt-too-large",
    "window-too-long", "resolution-too-coarse",
    "spectral-quadrature-underresolved", "empty-input", "config-error".
    """

    def __init__(self, code, message=""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)
