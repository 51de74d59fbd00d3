#!/usr/bin/env python3
"""Validate the blinding_qkd project structure and imports."""
import os
import sys


def check_file_exists(path):
    return os.path.isfile(path)


def validate_structure():
    """Validate project structure."""
    base = os.path.dirname(os.path.abspath(__file__))

    files_to_check = [
        'blinding_qkd/__init__.py',
        'blinding_qkd/__main__.py',
        'blinding_qkd/main.py',
        'blinding_qkd/config.py',
        'blinding_qkd/models.py',
        'blinding_qkd/params.py',
        'blinding_qkd/errors.py',
        'blinding_qkd/analysis/__init__.py',
        'blinding_qkd/analysis/attack.py',
        'blinding_qkd/analysis/keyrate.py',
        'blinding_qkd/analysis/scan.py',
        'blinding_qkd/detector/__init__.py',
        'blinding_qkd/detector/response.py',
        'blinding_qkd/detector/timeline.py',
        'blinding_qkd/detector/calibration.py',
        'blinding_qkd/monitor/__init__.py',
        'blinding_qkd/monitor/photocurrent.py',
        'blinding_qkd/monitor/blinding.py',
        'blinding_qkd/simulation/__init__.py',
        'blinding_qkd/simulation/montecarlo.py',
        'blinding_qkd/output/__init__.py',
        'blinding_qkd/output/writers.py',
        'blinding_qkd/observability/__init__.py',
        'blinding_qkd/observability/logging.py',
        'blinding_qkd/observability/metrics.py',
        'tests/__init__.py',
        'tests/conftest.py',
        'configs/example.yaml',
        'configs/example.json',
        'requirements.txt',
        'requirements-dev.txt',
        'pytest.ini',
        'README.md',
    ]

    print("Checking file structure...")
    missing = []
    for f in files_to_check:
        if not check_file_exists(os.path.join(base, f)):
            print(f"  ✗ MISSING: {f}")
            missing.append(f)
        else:
            print(f"  ✓ {f}")

    if missing:
        print(f"\n✗ Missing {len(missing)} file(s)")
        return False

    print("\n✓ All required files present")
    return True


def check_imports():
    """Validate critical imports."""
    print("\nChecking imports...")
    try:
        from blinding_qkd.models import AnalysisConfig
        print("  ✓ AnalysisConfig imports")

        from blinding_qkd.analysis.scan import find_crossovers, sweep
        print("  ✓ Sweep and crossover search import")

        from blinding_qkd.monitor.blinding import constant_blinding_energy, monitor_suite
        print("  ✓ Photocurrent monitor imports")

        from blinding_qkd.simulation.montecarlo import simulate_session
        print("  ✓ Monte Carlo imports")

        from blinding_qkd.main import main
        print("  ✓ CLI imports")

        return True
    except Exception as e:
        print(f"  ✗ Import error: {e}")
        return False


if __name__ == '__main__':
    print("=" * 60)
    print("blinding_qkd Project Validation")
    print("=" * 60)

    struct_ok = validate_structure()
    imports_ok = check_imports()

    print("\n" + "=" * 60)
    if struct_ok and imports_ok:
        print("✓ Project structure and imports validated!")
        sys.exit(0)
    else:
        print("✗ Validation failed!")
        sys.exit(1)
