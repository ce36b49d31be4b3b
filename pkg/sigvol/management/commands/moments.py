from sigvol.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Classifies and estimates a moment of the terminal price."
    experiment = "moments"
