from hyperpose.cli import entry_point

entry_point()
