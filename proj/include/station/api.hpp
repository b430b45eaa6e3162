// Copyright 2026 The Data Station Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "station/station.hpp"

namespace station {

/// One multipart form part.
struct FormPart {
  std::string name;
  std::string filename;
  std::string content;
};

/// Transport-neutral HTTP request.
struct ApiRequest {
  std::string method;
  /// Path without the query string.
  std::string path;
  /// Repeated query keys keep every value in order.
  std::multimap<std::string, std::string> query;
  /// Value of the Authorization header.
  std::string authorization;
  std::string body;
  /// Multipart parts in arrival order.
  std::vector<FormPart> parts;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// HTTP status for a module error.
int http_status(ErrorCode code);

/// The station's JSON API. Every route authenticates the bearer secret and
/// delegates to one Station operation; errors render as
/// {"error": <name>, "message": ..., "details": [...]}.
class Api {
 public:
  explicit Api(Station& station) : station_(station) {}

  ApiResponse handle(const ApiRequest& request);

  /// "METHOD /path" for every route, with {id} placeholders.
  static std::vector<std::string> routes();

 private:
  Station& station_;
};

}  // namespace station
