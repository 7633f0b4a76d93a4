"""Command-line runner: configs, output files and analytic verification."""
