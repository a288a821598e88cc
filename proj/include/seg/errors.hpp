#ifndef SEG_ERRORS_HPP
#define SEG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace seg {

// Base class for everything this library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration or unresolvable inputs (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// Failures while running the pipeline on valid configuration (CLI exit code 1).
struct PipelineError : Error {
    using Error::Error;
};

struct IoError : PipelineError {
    using PipelineError::PipelineError;
};

struct TrainingError : PipelineError {
    using PipelineError::PipelineError;
};

struct InferenceError : PipelineError {
    using PipelineError::PipelineError;
};

struct EvalError : PipelineError {
    using PipelineError::PipelineError;
};

}  // namespace seg

#endif  // SEG_ERRORS_HPP
