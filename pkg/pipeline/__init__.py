from .errors import ConfigError, CrisdaError, DataLoadError, ModelFormatError, PipelineError
