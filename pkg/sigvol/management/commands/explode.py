from sigvol.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Simulates the signature-drift SDE and estimates the explosion probability."
    experiment = "explode"
