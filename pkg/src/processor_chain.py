import time
from typing import Any, Callable, Dict, List, Optional, Tuple, Union, Protocol
from dataclasses import dataclass, field
from .logger import logger


class Processor(Protocol):
    def process(self, message: Dict[str, Any]) -> Optional[Dict[str, Any]]:
        ...


@dataclass
class ProcessorResult:
    output: Optional[Dict[str, Any]]
    success: bool
    error: Optional[BaseException] = None
    failed_processor: Optional[str] = None
    timings: List[Tuple[str, float]] = field(default_factory=list)


class ProcessorChain:
    """
    Runs the steps of one sequence's pipeline in order.
    Each step receives the message dict returned by the previous step.
    Steps can be functions or objects with a .process() method.
    """
    def __init__(self, name: str = "chain"):
        self.name = name
        self.processors: List[Tuple[Union[Callable, Processor], str, Optional[str]]] = []
        logger.debug(f"Created processor chain: {name}")

    def add_processor(self, processor: Union[Callable, Processor], name: Optional[str] = None,
                      description: Optional[str] = None) -> 'ProcessorChain':
        """
        Append a step to the chain.

        Args:
            processor: Function or object with .process(message) method
            name: Name used in logs and in errors.csv
            description: Optional description for this step
        Returns:
            Self for method chaining
        """
        processor_name = name or getattr(processor, '__name__', processor.__class__.__name__)
        self.processors.append((processor, processor_name, description))
        logger.debug(f"Added {processor_name} to chain {self.name}")
        return self

    @property
    def names(self) -> List[str]:
        return [n for _, n, _ in self.processors]

    def __repr__(self) -> str:
        return f"<ProcessorChain name={self.name} processors={self.names}>"

    def process(self, message: Dict[str, Any]) -> ProcessorResult:
        """
        Pass a message through every step.

        Args:
            message: Per-sequence message; `sequence_id` is used in log lines
        Returns:
            ProcessorResult; on failure it names the failing step and holds the exception
        """
        current = message
        sequence_id = message.get('sequence_id', '?') if isinstance(message, dict) else '?'
        start_time = time.time()
        timings: List[Tuple[str, float]] = []
        for processor, processor_name, _ in self.processors:
            if current is None:
                logger.debug(f"Chain {self.name} [{sequence_id}]: dropped before {processor_name}")
                return ProcessorResult(None, False, None, processor_name, timings)
            step_start = time.time()
            try:
                if hasattr(processor, 'process') and callable(getattr(processor, 'process')):
                    current = processor.process(current)
                else:
                    current = processor(current)
                timings.append((processor_name, time.time() - step_start))
            except Exception as e:
                logger.error(f"Chain {self.name} [{sequence_id}]: {processor_name} failed: {type(e).__name__}: {e}")
                return ProcessorResult(None, False, e, processor_name, timings)
        logger.debug(f"Chain {self.name} [{sequence_id}]: completed in {time.time() - start_time:.3f}s "
                     f"({', '.join(f'{n}={t:.3f}s' for n, t in timings)})")
        return ProcessorResult(current, True, None, None, timings)
