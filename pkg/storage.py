"""Storage layer for experiment results."""
import json
import hashlib
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from config import Config
from experiment import ExperimentConfig, format_csv
from metrics import SummaryStats


class ResultStore:
    """Keeps each run as a CSV table plus a JSON manifest under the results directory."""

    def __init__(self, root: Optional[Union[str, Path]] = None):
        if root is None:
            Config.ensure_directories()
            self.root = Config.RESULTS_DIR
        else:
            self.root = Path(root)
            self.root.mkdir(parents=True, exist_ok=True)

    def save_run(self, config: ExperimentConfig, rows: Sequence[SummaryStats]) -> str:
        """Save the CSV and manifest of a run; returns its id."""
        run_id = self.generate_run_id(config)

        csv_file = self.root / f"{run_id}.csv"
        with open(csv_file, "w", encoding="utf-8", newline="") as f:
            f.write(format_csv(rows))

        manifest = {
            "id": run_id,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": config.model_dump(mode="json"),
            "csv": csv_file.name,
            "rows": [self._row_summary(row) for row in rows],
        }
        with open(self.root / f"{run_id}.json", "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2)

        return run_id

    def get_manifest(self, run_id: str) -> Optional[Dict]:
        """Retrieve a run manifest by id."""
        manifest_file = self.root / f"{run_id}.json"
        if manifest_file.exists():
            with open(manifest_file, "r", encoding="utf-8") as f:
                return json.load(f)
        return None

    def get_csv(self, run_id: str) -> Optional[str]:
        """Retrieve the CSV table of a run."""
        csv_file = self.root / f"{run_id}.csv"
        if csv_file.exists():
            return csv_file.read_text(encoding="utf-8")
        return None

    def load_config(self, run_id: str) -> Optional[ExperimentConfig]:
        """Rebuild the configuration a run was produced from."""
        manifest = self.get_manifest(run_id)
        if manifest is None:
            return None
        return ExperimentConfig.model_validate(manifest["config"])

    def list_runs(self) -> List[Dict]:
        """All stored manifests, oldest first."""
        runs = []
        for manifest_file in self.root.glob("*.json"):
            with open(manifest_file, "r", encoding="utf-8") as f:
                runs.append(json.load(f))
        return sorted(runs, key=lambda m: (m.get("created", ""), m.get("id", "")))

    @staticmethod
    def generate_run_id(config: ExperimentConfig) -> str:
        """Short id derived from the configuration, seed included."""
        unique_string = json.dumps(config.model_dump(mode="json"), sort_keys=True)
        return hashlib.md5(unique_string.encode()).hexdigest()[:12]

    @staticmethod
    def _row_summary(row: SummaryStats) -> Dict:
        data = row.model_dump()
        low, high = row.ci95
        data["ci95_low"] = low
        data["ci95_high"] = high
        return data
