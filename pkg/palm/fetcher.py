import io
import logging
from pathlib import Path

import httpx
import pandas as pd
from tenacity import retry, stop_after_attempt, wait_exponential

from palm.config import get_settings
from palm.errors import DatasetError

log = logging.getLogger(__name__)


class DatasetFetcher:
    """Download benchmark CSV files into the data directory."""

    def __init__(self, data_dir: str | Path | None = None, timeout: int | None = None) -> None:
        settings = get_settings()
        self.data_dir = Path(data_dir or settings.data_dir)
        self.timeout = timeout or settings.fetch_timeout

    @retry(stop=stop_after_attempt(3), wait=wait_exponential(min=1, max=10))
    async def fetch_text(self, url: str) -> str:
        async with httpx.AsyncClient(timeout=self.timeout, follow_redirects=True) as client:
            response = await client.get(url)
            response.raise_for_status()
            return response.text

    @staticmethod
    def validate_csv(text: str) -> pd.DataFrame:
        """The payload must be a headered table of numbers."""
        try:
            frame = pd.read_csv(io.StringIO(text))
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise DatasetError(f"payload is not a CSV table: {exc}") from exc
        if frame.empty:
            raise DatasetError("payload has no data rows")
        try:
            frame.apply(pd.to_numeric, errors="raise")
        except (ValueError, TypeError) as exc:
            raise DatasetError(f"payload has non-numeric cells: {exc}") from exc
        return frame

    async def download(self, url: str, filename: str, force: bool = False) -> Path:
        dest = self.data_dir / filename
        if dest.exists() and not force:
            log.info(f"{dest} already exists, skipping download")
            return dest
        text = await self.fetch_text(url)
        frame = self.validate_csv(text)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)
        log.info(f"Saved {len(frame)} rows with columns {list(frame.columns)} to {dest}")
        return dest
