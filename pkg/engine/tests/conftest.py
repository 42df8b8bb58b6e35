import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

# Add the project directory to Python path so 'torheight' can be imported
project_dir = Path(__file__).parent.parent
sys.path.insert(0, str(project_dir))

from seed_instances import SAMPLE_INSTANCES
from torheight.main import run


@dataclass
class CliResult:
    exit_code: int
    stdout: str
    stderr: str

    @property
    def document(self) -> dict:
        return json.loads(self.stdout)

    @property
    def payload(self) -> dict:
        return self.document["payload"]


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document into the test's temp directory and return its path"""

    def _write(document, name="input.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def sample_file(write_json):
    """Path of one of the seeded sample instances"""

    def _sample(name):
        return write_json(SAMPLE_INSTANCES[name][1], name)

    return _sample


@pytest.fixture
def run_cli():
    """Run the CLI in-process and capture exit code, stdout and stderr"""

    def _run(*argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        code = run(list(argv), stdout=stdout, stderr=stderr)
        return CliResult(code, stdout.getvalue(), stderr.getvalue())

    return _run
