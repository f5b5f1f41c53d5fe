#pragma once

#include <stdexcept>
#include <string>

namespace sentry {

/// Base class for all errors raised by the sentry core library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class MalformedJson : public Error {
public:
    explicit MalformedJson(const std::string& msg) : Error("malformed JSON: " + msg) {}
};

class UnknownTool : public Error {
public:
    explicit UnknownTool(const std::string& tool)
        : Error("unknown tool: " + tool), tool_(tool) {}
    const std::string& tool() const { return tool_; }

private:
    std::string tool_;
};

class LabelMismatch : public Error {
public:
    explicit LabelMismatch(const std::string& msg) : Error("label mismatch: " + msg) {}
};

class SchemaViolation : public Error {
public:
    explicit SchemaViolation(const std::string& msg) : Error("schema violation: " + msg) {}
};

class SpliceUnsupported : public Error {
public:
    explicit SpliceUnsupported(const std::string& msg) : Error("splice unsupported: " + msg) {}
};

class MissingRuleEntry : public Error {
public:
    explicit MissingRuleEntry(const std::string& tool)
        : Error("no stub rule entry for high-risk tool: " + tool) {}
};

class GatewayTimeout : public Error {
public:
    explicit GatewayTimeout(const std::string& msg) : Error("judge gateway timeout: " + msg) {}
};

class UnparseableVerdict : public Error {
public:
    explicit UnparseableVerdict(const std::string& msg)
        : Error("unparseable judge verdict: " + msg) {}
};

}  // namespace sentry
