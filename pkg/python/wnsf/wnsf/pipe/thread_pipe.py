from concurrent.futures import ThreadPoolExecutor, as_completed
from copy import deepcopy
from typing import Literal

from wnsf.config import Settings
from wnsf.steps import FitContext, Step
from . import Pipe


class ThreadPipe(Pipe):
    """Runs every branch on its own copy of the context.

    Finished contexts land in `context.candidates` and error messages in
    `context.failures`, both keyed by branch name in branch order. The pipe
    fails only when every branch does.
    """

    @property
    def pipe_type(self):
        return "ThreadPipe"

    @property
    def pipe_attributes(self) -> set:
        return {"max_workers"}

    def __init__(
        self,
        name: str,
        steps: list["Step | Pipe"],
        description: str = "",
        audit: bool = True,
        flagging_strategy: Literal["any", "all"] = "any",
        max_workers: int | None = None,
    ):
        super().__init__(
            name=name,
            steps=steps,
            description=description,
            audit=audit,
            flagging_strategy=flagging_strategy,
        )
        self.max_workers = max_workers or Settings.max_workers()

    def run(self, context: FitContext) -> FitContext:
        outputs: dict[str, FitContext] = {}
        errors: dict[str, Exception] = {}
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            future_to_step = {
                executor.submit(step, deepcopy(context)): step
                for step in self.steps
            }
            for future in as_completed(future_to_step):
                name = future_to_step[future].get_name()
                try:
                    outputs[name] = future.result()
                except Exception as e:
                    errors[name] = e

        order = [step.get_name() for step in self.steps]
        context.candidates = {name: outputs[name] for name in order if name in outputs}
        context.failures = {**context.failures,
                            **{name: str(errors[name]) for name in order if name in errors}}
        self.log_audit({"succeeded": list(context.candidates), "failed": list(errors)})

        if not outputs:
            raise errors[order[0]]
        return context
