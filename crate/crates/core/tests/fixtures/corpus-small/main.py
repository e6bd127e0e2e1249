"""Entry point."""
from lib import helpers

helpers.log("start")
