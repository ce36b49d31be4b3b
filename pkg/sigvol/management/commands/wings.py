from sigvol.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Fits the right-wing slope of implied total variance."
    experiment = "wings"
