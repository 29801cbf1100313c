#pragma once

#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

namespace crisis {

// Text translation between language codes. Every implementation must be an
// identity map when source and target coincide.
class TranslationClient {
public:
    virtual ~TranslationClient() = default;
    virtual std::string translate(const std::string& text, const std::string& source,
                                  const std::string& target) = 0;
};

// Word-by-word translator backed by bilingual token lists; unknown tokens
// pass through unchanged. Deterministic, intended for tests and fixtures.
class DictionaryTranslator : public TranslationClient {
public:
    // CSV columns: source_token,target_token (one pair per row).
    void load_pair(const std::string& source, const std::string& target,
                   const std::string& csv_path);
    void add_entry(const std::string& source, const std::string& target,
                   const std::string& from_token, const std::string& to_token);

    std::string translate(const std::string& text, const std::string& source,
                          const std::string& target) override;

private:
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>>
        pairs_;
};

// Persistent write-through cache around another client. Records are JSONL:
// {"text_hash": ..., "source": ..., "target": ..., "translation": ...}.
// With no inner client, a cache miss is an error (frozen-cache mode).
class CachingTranslator : public TranslationClient {
public:
    CachingTranslator(std::string cache_path, std::shared_ptr<TranslationClient> inner);

    std::string translate(const std::string& text, const std::string& source,
                          const std::string& target) override;

    std::size_t size() const { return cache_.size(); }
    std::size_t miss_count() const { return misses_; }

    static std::string text_hash(const std::string& text);

private:
    std::string path_;
    std::shared_ptr<TranslationClient> inner_;
    std::map<std::tuple<std::string, std::string, std::string>, std::string> cache_;
    std::size_t misses_ = 0;
};

// JSON-over-HTTP client: POST {"text","source","target"} to the endpoint,
// expects {"translation": ...}. Endpoint comes from the constructor or the
// CRISISXFER_TRANSLATE_ENDPOINT environment variable.
class HttpTranslator : public TranslationClient {
public:
    explicit HttpTranslator(std::string endpoint = "");

    std::string translate(const std::string& text, const std::string& source,
                          const std::string& target) override;

private:
    std::string endpoint_;
};

}  // namespace crisis
