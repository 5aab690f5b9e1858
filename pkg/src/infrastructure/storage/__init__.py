from .results_log import EVENT_KINDS, ResultsLog, read_events
