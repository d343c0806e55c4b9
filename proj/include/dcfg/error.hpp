#pragma once

#include <stdexcept>
#include <string>

namespace dcfg {

/// Base class of every error thrown by the library. The alternating solver
/// attaches the outer-iteration index when an error escapes one of its phases.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  int outer_iteration = -1;
};

#define DCFG_DEFINE_ERROR(name)                               \
  class name : public Error {                                 \
   public:                                                    \
    explicit name(const std::string& what) : Error(what) {}   \
  };

DCFG_DEFINE_ERROR(DuplicateKey)
DCFG_DEFINE_ERROR(UnknownKey)
DCFG_DEFINE_ERROR(MissingAssignment)
DCFG_DEFINE_ERROR(NonPositiveDensity)
DCFG_DEFINE_ERROR(DimensionMismatch)
DCFG_DEFINE_ERROR(NotOnManifold)
DCFG_DEFINE_ERROR(InvalidArgument)
DCFG_DEFINE_ERROR(EmptySupport)
DCFG_DEFINE_ERROR(TreewidthExceeded)
DCFG_DEFINE_ERROR(SingularSystem)
DCFG_DEFINE_ERROR(NonFiniteNumber)
DCFG_DEFINE_ERROR(UnnormalizedQuaternion)
DCFG_DEFINE_ERROR(DisconnectedGraph)
DCFG_DEFINE_ERROR(InsufficientPoses)
DCFG_DEFINE_ERROR(MissingLabel)
DCFG_DEFINE_ERROR(EmptyCloud)

#undef DCFG_DEFINE_ERROR

/// Parser errors carry the 1-based line of the offending record.
class MalformedRecord : public Error {
 public:
  MalformedRecord(int line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line(line) {}
  int line;
};

}  // namespace dcfg
