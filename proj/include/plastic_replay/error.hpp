#pragma once

#include <stdexcept>
#include <string>

namespace plastic_replay {

// Every library failure derives from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PLASTIC_REPLAY_ERROR(Name)        \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

PLASTIC_REPLAY_ERROR(OrderingError);
PLASTIC_REPLAY_ERROR(BoundsError);
PLASTIC_REPLAY_ERROR(EmptyBufferError);
PLASTIC_REPLAY_ERROR(ConfigError);
PLASTIC_REPLAY_ERROR(DomainError);
PLASTIC_REPLAY_ERROR(ShapeError);
PLASTIC_REPLAY_ERROR(StalenessError);
PLASTIC_REPLAY_ERROR(PreconditionError);
PLASTIC_REPLAY_ERROR(ParseError);
PLASTIC_REPLAY_ERROR(InputError);
PLASTIC_REPLAY_ERROR(NumericError);

#undef PLASTIC_REPLAY_ERROR

}  // namespace plastic_replay
