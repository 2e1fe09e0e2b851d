from .runner import StudyConfig, StudyRecord, fit_all, run_study
from .fitting import RateFit, fit_rate
from .export import emit

__all__ = ['StudyConfig', 'StudyRecord', 'run_study', 'fit_all', 'RateFit', 'fit_rate', 'emit']
