"""Tests for JSON logging and Prometheus metrics."""
import io
import json
import logging
import sys

import pytest

from blinding_qkd.observability.logging import JSONFormatter, RunContextFilter, setup_logging
from blinding_qkd.observability.metrics import get_metrics_text, record_alarm, record_crossover, record_sweep_point


@pytest.fixture(autouse=True)
def restore_root_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def _record(msg='hello', **extra):
    record = logging.LogRecord('blinding_qkd.test', logging.INFO, __file__, 1, msg, None, None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


class TestJSONFormatter:
    """Test the JSON log formatter."""

    def test_base_fields(self):
        entry = json.loads(JSONFormatter().format(_record()))
        assert entry['level'] == 'INFO'
        assert entry['message'] == 'hello'
        assert entry['logger'] == 'blinding_qkd.test'
        assert 'timestamp' in entry

    def test_context_fields(self):
        entry = json.loads(JSONFormatter().format(_record(length_km=50.0, case='CASE_II', unrelated='x')))
        assert entry['length_km'] == 50.0
        assert entry['case'] == 'CASE_II'
        assert 'unrelated' not in entry

    def test_exception(self):
        try:
            raise RuntimeError('boom')
        except RuntimeError:
            record = logging.LogRecord('x', logging.ERROR, __file__, 1, 'failed', None, sys.exc_info())
        entry = json.loads(JSONFormatter().format(record))
        assert 'RuntimeError: boom' in entry['exception']


class TestSetupLogging:
    """Test logging setup and run context."""

    def test_single_json_handler(self):
        stream = io.StringIO()
        setup_logging(logging.INFO, stream)
        setup_logging(logging.INFO, stream)
        root = logging.getLogger()
        assert len(root.handlers) == 1

        root.handlers[0].addFilter(RunContextFilter(subcommand='sweep', cycle_count=500, seed=3))
        logging.getLogger('blinding_qkd.test').info('swept')
        entry = json.loads(stream.getvalue().strip())
        assert entry['message'] == 'swept'
        assert entry['subcommand'] == 'sweep'
        assert entry['cycle_count'] == 500
        assert entry['seed'] == 3

    def test_level_filters(self):
        stream = io.StringIO()
        setup_logging(logging.WARNING, stream)
        logging.getLogger('blinding_qkd.test').info('quiet')
        assert stream.getvalue() == ''


class TestMetrics:
    """Test the metrics exposition."""

    def test_counters_exposed(self):
        record_sweep_point('CASE_II')
        record_crossover('insecure', True)
        record_alarm(False)
        text = get_metrics_text()
        assert 'sweep_points_total{case="CASE_II"}' in text
        assert 'crossover_searches_total{kind="insecure",found="true"}' in text
        assert 'monitor_evaluations_total{alarm="false"}' in text
