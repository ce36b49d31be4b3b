from sigvol.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Builds put and call implied volatility smiles with confidence intervals."
    experiment = "smile"
