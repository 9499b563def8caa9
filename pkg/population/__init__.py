from .instruction_population import InstructionCandidate, Population
