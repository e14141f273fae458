import uuid
import os
import json
import csv
import io
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

from errors import OutputError

# Configuration
OUTPUT_FOLDER = "runs"
MANIFEST_SUFFIX = ".manifest.json"


def ensure_output_directory(path: Optional[str] = None) -> Path:
    """Ensure the directory that will hold `path` (or the default run folder) exists"""
    folder = Path(path).parent if path else Path(OUTPUT_FOLDER)
    try:
        folder.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(str(folder), exc.strerror or str(exc)) from exc
    return folder


def generate_run_id() -> str:
    return uuid.uuid4().hex


def manifest_path_for(out: Optional[str], run_id: str) -> str:
    """Manifest next to the output file, or in the run folder when output goes to stdout"""
    if out:
        return out + MANIFEST_SUFFIX
    return os.path.join(OUTPUT_FOLDER, f"{run_id}{MANIFEST_SUFFIX}")


def atomic_write_text(path: str, text: str) -> None:
    """Write through a temporary file in the target directory and rename it into place"""
    folder = ensure_output_directory(path)
    tmp_name = None
    try:
        with tempfile.NamedTemporaryFile('w', dir=folder, prefix=".tmp-", suffix=Path(path).suffix,
                                         delete=False, encoding='utf-8', newline='') as tmp:
            tmp_name = tmp.name
            tmp.write(text)
        os.replace(tmp_name, path)
    except OSError as exc:
        if tmp_name and os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise OutputError(path, exc.strerror or str(exc)) from exc


def read_text(path: str) -> str:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return f.read()
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from exc


def render_csv(header: Sequence[str], rows: Iterable[Sequence], manifest_name: str) -> str:
    buffer = io.StringIO()
    buffer.write(f"# manifest: {manifest_name}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


def render_json(payload, manifest_name: str) -> str:
    """JSON has no comments, so the manifest name leads the document as its first key"""
    return json.dumps({"manifest": manifest_name, **payload}, indent=2) + "\n"


def emit(text: str, out: Optional[str]) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        print(text, end="")
