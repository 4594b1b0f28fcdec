import hmmforget


def pytest_report_header(config):
    return f"hmmforget kernel backend: {hmmforget.backend_name()}"
