"""Base result record for frontselect reports."""

from __future__ import annotations

from dataclasses import fields
import json
import logging
from pathlib import Path
from typing import Any, ClassVar

from .exceptions import OutputError
from .utils import to_jsonable

_LOGGER = logging.getLogger(__name__)


class Report:
    """Mixin for dataclass results that can be exported as JSON."""

    # Fields that hold bulky arrays or live objects and stay out of JSON exports
    export_exclude: ClassVar[tuple[str, ...]] = ()

    def to_dict(self) -> dict[str, Any]:
        """Return the exportable fields as plain JSON-compatible data."""
        data = {
            field.name: getattr(self, field.name)
            for field in fields(self)  # type: ignore[arg-type]
            if field.name not in self.export_exclude
        }
        return to_jsonable(data)

    def to_json(self) -> str:
        """Return the report rendered as indented JSON."""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_json(self, path: str | Path) -> Path:
        """Write the report to a JSON file.

        Args:
            path: Destination file

        Returns:
            The path written

        Raises:
            OutputError: The file could not be written
        """
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_json())
        except OSError as err:
            raise OutputError(f"Could not write {path}: {err}") from err
        _LOGGER.debug("Wrote %s to %s", type(self).__name__, path)
        return path
