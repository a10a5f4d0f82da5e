"""Scenario catalog, suites, configuration, and the batch CLI."""

from .config import LabConfig, load_config  # noqa: F401
from .reports import Assertion, ExperimentReport, Table, write_report  # noqa: F401
from .scenarios import Scenario, catalog, get_scenario  # noqa: F401
from .suites import SUITES, SuiteParams, run_suite, suite_names  # noqa: F401
