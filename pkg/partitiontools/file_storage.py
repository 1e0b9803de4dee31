"""
Atomic artifact writes: every file is written to a temporary sibling and renamed into
place, so readers never see a partial file.
"""
import logging
import os
import tempfile
from typing import List, Tuple

logger = logging.getLogger(__name__)


def _temporary_copy(path: str, text: str) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(dir=directory, prefix=f".{os.path.basename(path)}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as f:
            f.write(text)
    except Exception:
        os.unlink(temp_path)
        raise
    return temp_path


def atomic_write(path: str, text: str) -> None:
    """Writes text to path through a temporary file and os.replace"""
    temp_path = _temporary_copy(path, text)
    os.replace(temp_path, path)
    logger.debug(f"Wrote {path}")


class ArtifactWriter:
    """
    Stages the output files of one command and publishes them together.

    Used as a context manager: files are staged with ``write_text`` and renamed into
    place when the block exits cleanly. On an exception the staged files are removed
    and nothing is published.
    """

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self._staged: List[Tuple[str, str]] = []
        self.published: List[str] = []

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def write_text(self, name: str, text: str) -> str:
        final = self.path(name)
        self._staged.append((_temporary_copy(final, text), final))
        return final

    def discard(self) -> None:
        for temp_path, _ in self._staged:
            if os.path.exists(temp_path):
                os.unlink(temp_path)
        if self._staged:
            logger.info(f"Discarded {len(self._staged)} staged files in {self.out_dir}")
        self._staged = []

    def commit(self) -> List[str]:
        published = []
        try:
            for temp_path, final in self._staged:
                os.replace(temp_path, final)
                published.append(final)
        except OSError:
            logger.error(f"Publishing artifacts to {self.out_dir} failed", exc_info=True)
            for final in published:
                os.unlink(final)
            self.discard()
            raise
        self._staged = []
        self.published += published
        logger.info(f"Wrote {len(published)} files to {self.out_dir}")
        return published

    def __enter__(self) -> "ArtifactWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is None:
            self.commit()
        else:
            self.discard()
        return False
