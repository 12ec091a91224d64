from abc import ABC, abstractmethod
from functools import wraps
import logging

import re
import time
import traceback
from typing import Literal

from datetime import datetime

from wnsf.exceptions import StepError
from wnsf.steps import FitContext, Step

logger = logging.getLogger("wnsf.pipe")


class Pipe(ABC):
    """Group of steps (or nested pipes) run against one FitContext."""

    @property
    @abstractmethod
    def pipe_type(self):
        pass

    @property
    def pipe_attributes(self) -> set:
        return set()

    def __init__(self,
                 name: str,
                 steps: list["Step | Pipe"],
                 description: str = "",
                 audit=True,
                 flagging_strategy: Literal["any", "all"] = "any",
                 ):
        if re.search(r'[<>:"/\\|?*\x00-\x1f]', name):
            raise ValueError(f"Invalid Pipe name '{name}': Pipe name cannot contain <>:\"/\\|?* or control characters.")
        if flagging_strategy not in ("any", "all"):
            raise ValueError("flagging_strategy must be 'any' or 'all'")
        self.name = name
        self.steps = steps
        self.description = description
        self.audit = audit
        self.flagging_strategy = flagging_strategy

        self._id = None
        self._audit_log = self._empty_log()
        self._flag = False
        self._exec_time = None

        self.initialize_steps()

    def _empty_log(self):
        return {
            "name": self.name,
            "id": self._id,
            "pipe_type": self.pipe_type,
            "log": {},
            "status": "noexec"
        }

    @abstractmethod
    def run(self, context: FitContext) -> FitContext:
        pass

    @staticmethod
    def _time_logger(func):
        @wraps(func)
        def wrapper(self, *args, **kwargs):
            start = time.perf_counter()
            try:
                return func(self, *args, **kwargs)
            finally:
                self._exec_time = (time.perf_counter() - start) * 1000
                self.log_audit({"execution_time": self._exec_time}, level="main")
        return wrapper

    @_time_logger
    def _run(self, context, *args, **kwargs):
        try:
            self.reset()
            result = self.run(context)
            self.set_flag()
            self.log_audit({"status": "success", "flag": self.get_flag(), "logged_time": datetime.now().strftime("%Y-%m-%d %H:%M:%S")}, level="main")
            return result
        except Exception as e:
            self.set_flag()
            self.log_audit({"message": str(e), "traceback": traceback.format_exc()}, level="log")
            self.log_audit({"status": "error", "flag": self.get_flag(), "logged_time": datetime.now().strftime("%Y-%m-%d %H:%M:%S")}, level="main")
            logger.debug("pipe %s failed: %s", self.name, e)
            if isinstance(e, StepError):
                raise
            raise StepError(self.name, str(e)) from e

    def __call__(self, context, *args, **kwds):
        return self._run(context, *args, **kwds)

    def assign_id(self, id):
        self._id = id

    def get_id(self):
        return self._id

    def get_name(self):
        return self.name

    def set_flag(self):
        flags = [step.get_flag() for step in self.steps]
        if self.flagging_strategy == "any":
            self._flag = any(flags)
        else:
            self._flag = bool(flags) and all(flags)

    def get_flag(self):
        return self._flag

    def get_time(self):
        return self._exec_time

    def log_audit(self, value, level="log"):
        if not self.audit:
            self._audit_log["status"] = "disabled"
            return

        if level not in ["log", "main"]:
            raise ValueError("Invalid log level. Must be 'log' or 'main'.")

        if not isinstance(value, dict):
            raise ValueError("Audit log entry must be a dict.")

        if level == "log":
            self._audit_log["log"] = {**self._audit_log["log"], **value}
        elif level == "main":
            self._audit_log = {**self._audit_log, **value}

    def get_audit_log(self):
        """Own log with the logs of every step nested under "steps"."""
        if not self.audit:
            return self._audit_log
        return {**self._audit_log, "steps": [step.get_audit_log() for step in self.steps]}

    def reset(self):
        self._audit_log = self._empty_log()
        self._flag = False
        self._exec_time = None

        for step in self.steps:
            step.reset()

    def initialize_steps(self):
        names = set()
        for i, step in enumerate(self.steps):
            if step.get_name() in names:
                raise ValueError(
                    f"Two or more steps have the same name: '{step.get_name()}' in pipe '{self.name}'")
            names.add(step.get_name())
            step.assign_id(i + 1)
            step.reset()

    def to_json(self) -> dict:
        json_dict = {
            "name": self.name,
            "pipe_type": self.pipe_type,
            "description": self.description,
            "flagging_strategy": self.flagging_strategy,
            "steps": [step.to_json() for step in self.steps],
        }
        for attribute in sorted(self.pipe_attributes):
            if not hasattr(self, attribute):
                raise AttributeError(f"Pipe {self.__class__.__name__}.{self.name} has no attribute '{attribute}'")
            json_dict[attribute] = getattr(self, attribute)
        return json_dict

    def __repr__(self):
        return f"<Pipe name={self.name} id={self._id} type={self.pipe_type} steps={len(self.steps)} flag={self._flag}>"
