"""
Command runners of the command line interface
"""

from .base import registered_commands, run_command
from .bounds import BoundsCommand
from .colgen import ColgenCommand
from .minimum import MinTestCommand
from .report import ReportCommand
from .rum import RumTestCommand
from .simulate import SimulateCommand


BoundsCommand.register()
MinTestCommand.register()
RumTestCommand.register()
ColgenCommand.register()
SimulateCommand.register()
ReportCommand.register()

__all__ = ["registered_commands", "run_command"]
