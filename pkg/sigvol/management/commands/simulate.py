from sigvol.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Simulates the price model and reports its martingale gap."
    experiment = "simulate"
