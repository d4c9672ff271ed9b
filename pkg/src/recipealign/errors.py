class FormatError(ValueError):
    """Malformed input file or record."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class PipelineError(RuntimeError):
    """Input was well-formed but the pipeline cannot produce a result."""
