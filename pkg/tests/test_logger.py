import json
import os
import time

from scr.logger import (
    LOG_FILE,
    cleanup_old_logs,
    drop_empty_fields,
    leading_context_first,
    ledger_json,
)


def test_leading_context_first():
    event = {'event': 'бридж', 'trust': 48.0, 'peer_id': 'a', 'k': 100, 'scenario': 'blue'}
    ordered = leading_context_first(None, 'info', event)
    assert list(ordered)[:3] == ['scenario', 'k', 'peer_id']
    assert ordered['trust'] == 48.0


def test_drop_empty_fields():
    assert drop_empty_fields(None, 'info', {'event': 'x', 'saboteur': None, 'note': ''}) == {'event': 'x'}


def test_json_keeps_cyrillic():
    rendered = ledger_json({'event': 'Симуляция завершена', 'k': 5})
    assert 'Симуляция завершена' in rendered
    assert json.loads(rendered)['k'] == 5


def test_cleanup_removes_only_old_rotated_files(tmp_path):
    old = tmp_path / f'{LOG_FILE}.2020-01-01'
    fresh = tmp_path / f'{LOG_FILE}.2020-01-02'
    current = tmp_path / LOG_FILE
    for path in (old, fresh, current):
        path.write_text('{}', encoding='utf-8')
    stale = time.time() - 30 * 24 * 3600
    os.utime(old, (stale, stale))
    os.utime(current, (stale, stale))

    cleanup_old_logs(tmp_path)
    assert not old.exists()
    assert fresh.exists()
    assert current.exists()
