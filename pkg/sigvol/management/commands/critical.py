from sigvol.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Evaluates the control functional of the critical moment case."
    experiment = "critical"
