#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wbdc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// linalg
class InvalidMatrix : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };

// model
class ModelParseError : public Error { using Error::Error; };
class ModelTopologyError : public Error { using Error::Error; };
class FrameNotFound : public Error { using Error::Error; };
class InvalidState : public Error { using Error::Error; };

// constraints
class InvalidInternalConstraint : public Error { using Error::Error; };
class InvalidConeParameter : public Error { using Error::Error; };
class InvalidTransitionPhase : public Error { using Error::Error; };

// qp
class QpError : public Error { using Error::Error; };
class NotConvex : public QpError { using QpError::QpError; };
class IterationLimit : public QpError { using QpError::QpError; };

class Infeasible : public QpError {
 public:
  /// `certificate` lists the inequality indices (and -1-based equality
  /// indices, encoded as -(i+1)) that cannot be satisfied together.
  Infeasible(const std::string& what, std::vector<int> certificate)
      : QpError(what), certificate_(std::move(certificate)) {}
  const std::vector<int>& certificate() const { return certificate_; }

 private:
  std::vector<int> certificate_;
};

class AssemblyError : public Error { using Error::Error; };

// controller
class FirstTaskDoesNotSpanBase : public Error { using Error::Error; };
class TorqueInconsistency : public Error { using Error::Error; };
class TaskConfigError : public Error { using Error::Error; };

// Wraps any error raised inside the control pipeline with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// sim / scenario
class ScenarioError : public Error { using Error::Error; };

}  // namespace wbdc
