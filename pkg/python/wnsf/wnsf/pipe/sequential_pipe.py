from . import Pipe
from wnsf.steps import FitContext


class SequentialPipe(Pipe):
    @property
    def pipe_type(self):
        return "SequentialPipe"

    def run(self, context: FitContext) -> FitContext:
        for step in self.steps:
            context = step(context)
            self.set_flag()
        return context
