"""
Logging handler that keeps the warnings of a run in memory
"""
import logging
from collections import Counter, deque
from datetime import datetime

# Store recent logs in memory
recent_logs = deque(maxlen=50)


class RunLogHandler(logging.Handler):
    """
    Keeps WARNING and above records of the current run and counts every
    record per level, so the command line can print a summary at exit.
    """

    def __init__(self):
        super().__init__(level=logging.DEBUG)
        self.counts = Counter()

    def emit(self, record):
        try:
            self.counts[record.levelname] += 1
            if record.levelno < logging.WARNING:
                return
            recent_logs.append({
                'timestamp': datetime.fromtimestamp(record.created).isoformat(),
                'level': record.levelname,
                'name': record.name,
                'message': record.getMessage(),
            })
        except Exception:
            self.handleError(record)

    @property
    def warning_count(self) -> int:
        return self.counts['WARNING'] + self.counts['ERROR'] + self.counts['CRITICAL']

    def reset(self) -> None:
        self.counts.clear()
        recent_logs.clear()


def get_recent_logs(count: int = 10) -> str:
    """Get recent warnings as formatted string"""
    if not recent_logs:
        return "No recent warnings."

    logs = list(recent_logs)[-count:]
    lines = [f"Recent warnings ({len(logs)} entries):"]
    for log in logs:
        timestamp = log['timestamp'].split('T')[1].split('.')[0]
        msg = log['message']
        if len(msg) > 200:
            msg = msg[:200] + "..."
        lines.append(f"  {timestamp} [{log['level']}] {log['name']}: {msg}")
    return "\n".join(lines)


# Global handler instance
run_log_handler = RunLogHandler()
