from .app import create_app
from .jobs import Job, JobRunner

__all__ = ["create_app", "Job", "JobRunner"]
