from django_tasks import task

from yamabelab import report


@task()
def run_check_task(name, n, seed, jet_path=None):
    return report.run_check(name, n, seed, jet_path)
