#!/usr/bin/env python3
"""
Metrics collector for harness runs

Timings are wall-clock and therefore never written into artifact files;
they go to the optional metrics file only.
"""

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional


@dataclass
class MetricsCollector:
    """Collects per-command request counts, errors and timings."""

    requests: deque = field(default_factory=lambda: deque(maxlen=10000))
    errors: deque = field(default_factory=lambda: deque(maxlen=1000))
    command_usage: Dict[str, int] = field(default_factory=lambda: defaultdict(int))
    response_times: Dict[str, List[float]] = field(default_factory=lambda: defaultdict(list))
    counters: Dict[str, int] = field(default_factory=lambda: defaultdict(int))
    start_time: datetime = field(default_factory=datetime.now)

    def record_request(self, request_type: str, command: Optional[str] = None):
        """Record a request."""
        self.requests.append({
            "type": request_type,
            "command": command,
            "timestamp": datetime.now().isoformat()
        })
        if command:
            self.command_usage[command] += 1

    def record_success(self, request_type: str, command: Optional[str] = None, execution_time: float = 0.0):
        """Record a successful request."""
        if command:
            self.response_times[command].append(execution_time)
            if len(self.response_times[command]) > 1000:
                self.response_times[command] = self.response_times[command][-1000:]

    def record_error(self, request_type: str, command: Optional[str] = None, error_message: str = "", execution_time: float = 0.0):
        """Record an error."""
        self.errors.append({
            "type": request_type,
            "command": command,
            "error": error_message,
            "execution_time": execution_time,
            "timestamp": datetime.now().isoformat()
        })

    def increment(self, counter: str, amount: int = 1):
        """Bump a named work counter (replicates run, multisets examined, ...)."""
        self.counters[counter] += amount

    def get_metrics(self) -> Dict[str, Any]:
        """Summarise everything recorded since start."""
        total_requests = len(self.requests)
        total_errors = len(self.errors)
        success_rate = ((total_requests - total_errors) / total_requests * 100) if total_requests > 0 else 0

        avg_response_times = {
            command: sum(times) / len(times)
            for command, times in self.response_times.items() if times
        }

        return {
            "total_requests": total_requests,
            "total_errors": total_errors,
            "success_rate": round(success_rate, 2),
            "command_usage": dict(self.command_usage),
            "avg_response_times": avg_response_times,
            "counters": dict(self.counters),
            "uptime_seconds": (datetime.now() - self.start_time).total_seconds()
        }

    def get_recent_errors(self, count: int = 10) -> List[Dict[str, Any]]:
        """Get recent errors."""
        return list(self.errors)[-count:]

    def save_metrics(self, filepath: str):
        """Save metrics to file."""
        metrics_data = {
            "start_time": self.start_time.isoformat(),
            "current_time": datetime.now().isoformat(),
            "metrics": self.get_metrics(),
            "recent_errors": self.get_recent_errors(50)
        }

        with open(filepath, 'w', encoding="utf-8") as f:
            json.dump(metrics_data, f, indent=2)
