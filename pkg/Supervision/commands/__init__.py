from pathlib import Path

from pydantic import ValidationError

from Supervision.helper.exceptions import ChipNotFound, InvalidInput


def read_model(model, path):
    """Validate a JSON file against a pydantic model."""
    path = Path(path)
    if not path.is_file():
        raise ChipNotFound(f"Input file not found: {path}")
    try:
        return model.model_validate_json(path.read_bytes())
    except ValidationError as e:
        raise InvalidInput(f"{path}: {e}")


def emit(text: str, out=None):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        print(text)
