import os
import sys
import tempfile

import pytest

# Логи тестов не должны попадать в рабочий каталог
os.environ.setdefault('SYNCTRUST_LOG_DIR', tempfile.mkdtemp(prefix='synctrust-logs-'))

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from scr.trust.trust_core import TrustParams, equilibrium_trust  # noqa: E402


@pytest.fixture
def params() -> TrustParams:
    return TrustParams()


@pytest.fixture
def t_star(params) -> float:
    return equilibrium_trust(params)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    directory = tmp_path / 'output'
    monkeypatch.setenv('SYNCTRUST_OUTPUT_DIR', str(directory))
    return directory
