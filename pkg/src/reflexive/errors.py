class ReflexiveError(Exception):
    """Error carrying a stable machine-readable ``code``.

    The codes (``invalid_datum``, ``out_of_domain``, ...) are part of the
    public contract; the CLI maps them onto exit codes.
    """

    def __init__(self, code, message=""):
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}" if message else code)
