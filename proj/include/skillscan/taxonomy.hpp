#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "skillscan/common.hpp"
#include "skillscan/corpus.hpp"

namespace skillscan {

enum class CredentialCategory {
    ApiKeysAndCloud,
    OAuthTokens,
    DatabaseCredentials,
    PasswordsAndPassphrases,
    SshTlsPrivateKeys,
    EncryptionKeys,
    SessionAndBearerTokens,
    WebhookSecrets,
    CryptoWalletKeys,
};

enum class CategoryGroup { AuthenticationAndAccess, LocalSecretsAndCrypto, SessionWebhookBlockchain };

enum class MatchKind { ProviderPrefix, EnvAccessor, ConnectionScheme, ProtocolIdentifier, CryptoMarker, GenericName };

NLOHMANN_JSON_SERIALIZE_ENUM(CredentialCategory,
                             {{CredentialCategory::ApiKeysAndCloud, "api_keys_and_cloud"},
                              {CredentialCategory::OAuthTokens, "oauth_tokens"},
                              {CredentialCategory::DatabaseCredentials, "database_credentials"},
                              {CredentialCategory::PasswordsAndPassphrases, "passwords_and_passphrases"},
                              {CredentialCategory::SshTlsPrivateKeys, "ssh_tls_private_keys"},
                              {CredentialCategory::EncryptionKeys, "encryption_keys"},
                              {CredentialCategory::SessionAndBearerTokens, "session_and_bearer_tokens"},
                              {CredentialCategory::WebhookSecrets, "webhook_secrets"},
                              {CredentialCategory::CryptoWalletKeys, "crypto_wallet_keys"}})

NLOHMANN_JSON_SERIALIZE_ENUM(CategoryGroup,
                             {{CategoryGroup::AuthenticationAndAccess, "authentication_and_access"},
                              {CategoryGroup::LocalSecretsAndCrypto, "local_secrets_and_crypto"},
                              {CategoryGroup::SessionWebhookBlockchain, "session_webhook_blockchain"}})

NLOHMANN_JSON_SERIALIZE_ENUM(MatchKind, {{MatchKind::ProviderPrefix, "provider_prefix"},
                                         {MatchKind::EnvAccessor, "env_accessor"},
                                         {MatchKind::ConnectionScheme, "connection_scheme"},
                                         {MatchKind::ProtocolIdentifier, "protocol_identifier"},
                                         {MatchKind::CryptoMarker, "crypto_marker"},
                                         {MatchKind::GenericName, "generic_name"}})

inline constexpr std::array<CredentialCategory, 9> kAllCategories = {
    CredentialCategory::ApiKeysAndCloud,        CredentialCategory::OAuthTokens,
    CredentialCategory::DatabaseCredentials,    CredentialCategory::PasswordsAndPassphrases,
    CredentialCategory::SshTlsPrivateKeys,      CredentialCategory::EncryptionKeys,
    CredentialCategory::SessionAndBearerTokens, CredentialCategory::WebhookSecrets,
    CredentialCategory::CryptoWalletKeys,
};

CategoryGroup group_of(CredentialCategory category);
std::string_view to_string(CredentialCategory category);
std::string_view to_string(MatchKind kind);

struct DictionaryEntry {
    std::string pattern;  // ECMAScript-style regex source
    CredentialCategory category = CredentialCategory::ApiKeysAndCloud;
    MatchKind kind = MatchKind::GenericName;
    bool case_insensitive = false;
};

struct CredentialMatch {
    CredentialCategory category = CredentialCategory::ApiKeysAndCloud;
    MatchKind kind = MatchKind::GenericName;
    Stream stream = Stream::Code;
    std::string file;
    Span span;
    std::string matched_text;

    friend bool operator==(const CredentialMatch&, const CredentialMatch&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CredentialMatch, category, kind, stream, file, span, matched_text)

/// Compiled keyword/regex dictionary. Immutable once built; safe to share across threads.
///
/// Boundary policy is derived from the entry kind: generic names only match when neither
/// neighbour is a letter (`TOKEN` hits `API_TOKEN` but not `tokenize`); provider prefixes and
/// env accessors must not be glued to a preceding alphanumeric character.
class KeywordDictionary {
  public:
    KeywordDictionary();
    explicit KeywordDictionary(std::vector<DictionaryEntry> entries);
    ~KeywordDictionary();
    KeywordDictionary(const KeywordDictionary&);
    KeywordDictionary& operator=(const KeywordDictionary&);
    KeywordDictionary(KeywordDictionary&&) noexcept;
    KeywordDictionary& operator=(KeywordDictionary&&) noexcept;

    /// Throws ArgumentError if the pattern does not compile.
    void add(DictionaryEntry entry);

    const std::vector<DictionaryEntry>& entries() const { return entries_; }
    bool covers_all_categories() const;

    std::vector<CredentialMatch> scan(std::string_view text, Stream stream, std::string_view file) const;

    /// Patterns of the GenericName entries (reused as NL credential terms).
    std::vector<std::string> generic_patterns() const;

    /// Stable digest of the entry list.
    std::string digest() const;

    /// {"replace": bool?, "entries": [{"pattern", "category", "kind", "case_insensitive"?}]}.
    /// Entries extend `base` unless "replace" is true.
    static KeywordDictionary from_json(const nlohmann::json& doc, const KeywordDictionary& base);
    static KeywordDictionary load(const std::filesystem::path& path, const KeywordDictionary& base);
    nlohmann::json to_json() const;

  private:
    struct Compiled;
    static std::shared_ptr<const Compiled> compile(const DictionaryEntry& entry);
    std::vector<DictionaryEntry> entries_;
    std::vector<std::shared_ptr<const Compiled>> compiled_;
};

KeywordDictionary default_dictionary();

/// All non-overlapping matches per entry, ordered by offset; overlaps across entries are kept.
std::vector<CredentialMatch> scan_text(std::string_view text, Stream stream, std::string_view file,
                                       const KeywordDictionary& dict);

struct BundleFlags {
    std::vector<CredentialMatch> nl_matches;
    std::vector<CredentialMatch> code_matches;
    bool excluded = true;
};

BundleFlags flag_bundle(const SkillBundle& bundle, const KeywordDictionary& dict);

}  // namespace skillscan
