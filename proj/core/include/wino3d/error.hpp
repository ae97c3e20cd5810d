// Copyright 2026 The wino3d Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WINO3D_ERROR_HPP_
#define WINO3D_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace wino3d {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WINO3D_DEFINE_ERROR(Name)    \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  }

WINO3D_DEFINE_ERROR(IoError);
WINO3D_DEFINE_ERROR(FormatError);
WINO3D_DEFINE_ERROR(ShapeError);
WINO3D_DEFINE_ERROR(UnsupportedSpec);
WINO3D_DEFINE_ERROR(EmptyMask);
WINO3D_DEFINE_ERROR(CacheError);
WINO3D_DEFINE_ERROR(RankError);
WINO3D_DEFINE_ERROR(NumericError);
WINO3D_DEFINE_ERROR(DegenerateError);
WINO3D_DEFINE_ERROR(DataError);
WINO3D_DEFINE_ERROR(ConfigError);
// Raised when a strategy's output disagrees with its oracle.
WINO3D_DEFINE_ERROR(ValidationError);

#undef WINO3D_DEFINE_ERROR

}  // namespace wino3d

#endif  // WINO3D_ERROR_HPP_
