#include <algorithm>
#include <fstream>
#include <set>

#include <boost/regex.hpp>

#include "skillscan/taxonomy.hpp"
#include "skillscan/text.hpp"
#include "../regex_util.hpp"

namespace skillscan {

struct KeywordDictionary::Compiled {
    boost::regex regex;
};

namespace {

bool passes_boundary(std::string_view text, Span span, MatchKind kind) {
    switch (kind) {
        case MatchKind::GenericName: return text::letter_bounded(text, span);
        case MatchKind::ProviderPrefix:
        case MatchKind::EnvAccessor:
        case MatchKind::CryptoMarker: return text::left_alnum_bounded(text, span);
        case MatchKind::ConnectionScheme:
        case MatchKind::ProtocolIdentifier: return true;
    }
    return true;
}

}  // namespace

std::shared_ptr<const KeywordDictionary::Compiled> KeywordDictionary::compile(const DictionaryEntry& entry) {
    boost::regex::flag_type flags = boost::regex::perl;
    if (entry.case_insensitive) flags |= boost::regex::icase;
    try {
        return std::make_shared<const Compiled>(Compiled{boost::regex(entry.pattern, flags)});
    } catch (const boost::regex_error& e) {
        throw ArgumentError("dictionary pattern does not compile: '" + entry.pattern + "': " + e.what());
    }
}

CategoryGroup group_of(CredentialCategory category) {
    switch (category) {
        case CredentialCategory::ApiKeysAndCloud:
        case CredentialCategory::OAuthTokens:
        case CredentialCategory::DatabaseCredentials: return CategoryGroup::AuthenticationAndAccess;
        case CredentialCategory::PasswordsAndPassphrases:
        case CredentialCategory::SshTlsPrivateKeys:
        case CredentialCategory::EncryptionKeys: return CategoryGroup::LocalSecretsAndCrypto;
        case CredentialCategory::SessionAndBearerTokens:
        case CredentialCategory::WebhookSecrets:
        case CredentialCategory::CryptoWalletKeys: return CategoryGroup::SessionWebhookBlockchain;
    }
    return CategoryGroup::AuthenticationAndAccess;
}

std::string_view to_string(CredentialCategory category) {
    switch (category) {
        case CredentialCategory::ApiKeysAndCloud: return "api_keys_and_cloud";
        case CredentialCategory::OAuthTokens: return "oauth_tokens";
        case CredentialCategory::DatabaseCredentials: return "database_credentials";
        case CredentialCategory::PasswordsAndPassphrases: return "passwords_and_passphrases";
        case CredentialCategory::SshTlsPrivateKeys: return "ssh_tls_private_keys";
        case CredentialCategory::EncryptionKeys: return "encryption_keys";
        case CredentialCategory::SessionAndBearerTokens: return "session_and_bearer_tokens";
        case CredentialCategory::WebhookSecrets: return "webhook_secrets";
        case CredentialCategory::CryptoWalletKeys: return "crypto_wallet_keys";
    }
    return "unknown";
}

std::string_view to_string(MatchKind kind) {
    switch (kind) {
        case MatchKind::ProviderPrefix: return "provider_prefix";
        case MatchKind::EnvAccessor: return "env_accessor";
        case MatchKind::ConnectionScheme: return "connection_scheme";
        case MatchKind::ProtocolIdentifier: return "protocol_identifier";
        case MatchKind::CryptoMarker: return "crypto_marker";
        case MatchKind::GenericName: return "generic_name";
    }
    return "unknown";
}

KeywordDictionary::KeywordDictionary() = default;
KeywordDictionary::~KeywordDictionary() = default;
KeywordDictionary::KeywordDictionary(const KeywordDictionary&) = default;
KeywordDictionary& KeywordDictionary::operator=(const KeywordDictionary&) = default;
KeywordDictionary::KeywordDictionary(KeywordDictionary&&) noexcept = default;
KeywordDictionary& KeywordDictionary::operator=(KeywordDictionary&&) noexcept = default;

KeywordDictionary::KeywordDictionary(std::vector<DictionaryEntry> entries) {
    for (auto& e : entries) add(std::move(e));
}

void KeywordDictionary::add(DictionaryEntry entry) {
    if (entry.pattern.empty()) {
        throw ArgumentError("dictionary pattern must not be empty");
    }
    compiled_.push_back(compile(entry));
    entries_.push_back(std::move(entry));
}

bool KeywordDictionary::covers_all_categories() const {
    std::set<CredentialCategory> seen;
    for (const auto& e : entries_) seen.insert(e.category);
    return seen.size() == kAllCategories.size();
}

std::vector<CredentialMatch> KeywordDictionary::scan(std::string_view text, Stream stream,
                                                     std::string_view file) const {
    std::vector<CredentialMatch> out;
    if (text.empty()) return out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& entry = entries_[i];
        detail::for_each_match(text, compiled_[i]->regex, [&](Span span) {
            if (!passes_boundary(text, span, entry.kind)) return;
            out.push_back({entry.category, entry.kind, stream, std::string(file), span,
                           std::string(text.substr(span.start, span.size()))});
        });
    }
    std::sort(out.begin(), out.end(), [](const CredentialMatch& a, const CredentialMatch& b) {
        if (a.span.start != b.span.start) return a.span.start < b.span.start;
        if (a.span.end != b.span.end) return a.span.end < b.span.end;
        if (a.category != b.category) return a.category < b.category;
        return a.kind < b.kind;
    });
    return out;
}

std::vector<std::string> KeywordDictionary::generic_patterns() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
        if (e.kind == MatchKind::GenericName) out.push_back(e.pattern);
    }
    return out;
}

nlohmann::json KeywordDictionary::to_json() const {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : entries_) {
        entries.push_back({{"pattern", e.pattern},
                           {"category", e.category},
                           {"kind", e.kind},
                           {"case_insensitive", e.case_insensitive}});
    }
    return {{"entries", entries}};
}

std::string KeywordDictionary::digest() const { return text::hex64(text::fnv1a64(to_json().dump())); }

KeywordDictionary KeywordDictionary::from_json(const nlohmann::json& doc, const KeywordDictionary& base) {
    KeywordDictionary out = doc.value("replace", false) ? KeywordDictionary{} : base;
    try {
        for (const auto& e : doc.at("entries")) {
            DictionaryEntry entry;
            entry.pattern = e.at("pattern").get<std::string>();
            entry.category = e.at("category").get<CredentialCategory>();
            entry.kind = e.at("kind").get<MatchKind>();
            entry.case_insensitive = e.value("case_insensitive", entry.kind == MatchKind::GenericName);
            out.add(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed dictionary: ") + e.what());
    }
    return out;
}

KeywordDictionary KeywordDictionary::load(const std::filesystem::path& path, const KeywordDictionary& base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read dictionary " + path.string());
    try {
        return from_json(nlohmann::json::parse(in), base);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed dictionary " + path.string() + ": " + e.what());
    }
}

KeywordDictionary default_dictionary() {
    using C = CredentialCategory;
    using K = MatchKind;
    const std::vector<DictionaryEntry> entries = {
        // Provider-specific key prefixes.
        {R"(sk-[A-Za-z0-9_\-]{6,})", C::ApiKeysAndCloud, K::ProviderPrefix, false},
        {R"(gsk[-_][A-Za-z0-9]{6,})", C::ApiKeysAndCloud, K::ProviderPrefix, false},
        {R"(AKIA[0-9A-Z]{16})", C::ApiKeysAndCloud, K::ProviderPrefix, false},
        {R"(ASIA[0-9A-Z]{16})", C::ApiKeysAndCloud, K::ProviderPrefix, false},
        {R"(AIza[0-9A-Za-z_\-]{20,})", C::ApiKeysAndCloud, K::ProviderPrefix, false},
        {R"(xox[abprs]-[A-Za-z0-9\-]{10,})", C::ApiKeysAndCloud, K::ProviderPrefix, false},
        {R"([rs]k_live_[0-9A-Za-z]{10,})", C::ApiKeysAndCloud, K::ProviderPrefix, false},
        {R"("type"\s*:\s*"service_account")", C::ApiKeysAndCloud, K::ProviderPrefix, false},
        {R"(gh[pousr]_[A-Za-z0-9]{8,})", C::OAuthTokens, K::ProviderPrefix, false},
        {R"(github_pat_[A-Za-z0-9_]{20,})", C::OAuthTokens, K::ProviderPrefix, false},
        {R"(ya29\.[0-9A-Za-z_\-]{10,})", C::OAuthTokens, K::ProviderPrefix, false},
        {R"(whsec_[A-Za-z0-9]{10,})", C::WebhookSecrets, K::ProviderPrefix, false},
        {R"(eyJ[A-Za-z0-9_\-]{8,}\.eyJ[A-Za-z0-9_\-]{8,})", C::SessionAndBearerTokens, K::ProviderPrefix, false},
        // Environment variable accessors.
        {R"(os\.environ)", C::ApiKeysAndCloud, K::EnvAccessor, false},
        {R"(os\.getenv)", C::ApiKeysAndCloud, K::EnvAccessor, false},
        {R"(process\.env)", C::ApiKeysAndCloud, K::EnvAccessor, false},
        {R"(\.env\b)", C::ApiKeysAndCloud, K::EnvAccessor, false},
        {R"(dotenv)", C::ApiKeysAndCloud, K::EnvAccessor, false},
        // Connection string schemes.
        {R"(mongodb(?:\+srv)?://)", C::DatabaseCredentials, K::ConnectionScheme, false},
        {R"(postgres(?:ql)?://)", C::DatabaseCredentials, K::ConnectionScheme, false},
        {R"(mysql://)", C::DatabaseCredentials, K::ConnectionScheme, false},
        {R"(redis://)", C::DatabaseCredentials, K::ConnectionScheme, false},
        {R"(amqps?://)", C::DatabaseCredentials, K::ConnectionScheme, false},
        {R"(jdbc:[a-z]+://)", C::DatabaseCredentials, K::ConnectionScheme, false},
        // Protocol-level identifiers.
        {R"(Authorization["']?\s*[:=]\s*[fF]?[`'"]?\s*Bearer)", C::SessionAndBearerTokens, K::ProtocolIdentifier, true},
        {R"(Authorization["']?\s*[:=]\s*[fF]?[`'"]?\s*Basic)", C::PasswordsAndPassphrases, K::ProtocolIdentifier, true},
        {R"(X-Hub-Signature(?:-256)?)", C::WebhookSecrets, K::ProtocolIdentifier, true},
        {R"(Stripe-Signature)", C::WebhookSecrets, K::ProtocolIdentifier, true},
        {R"(X-Slack-Signature)", C::WebhookSecrets, K::ProtocolIdentifier, true},
        {R"(X-Api-Key)", C::ApiKeysAndCloud, K::ProtocolIdentifier, true},
        // Cryptographic key markers.
        {R"(BEGIN (?:RSA |EC |DSA |OPENSSH |ENCRYPTED |PGP )?PRIVATE KEY)", C::SshTlsPrivateKeys, K::CryptoMarker, false},
        {R"(id_(?:rsa|dsa|ecdsa|ed25519)\b)", C::SshTlsPrivateKeys, K::CryptoMarker, false},
        {R"([\w\-]+\.(?:pem|p12|pfx)\b)", C::SshTlsPrivateKeys, K::CryptoMarker, false},
        {R"((?:HS|RS|ES)(?:256|384|512)\b)", C::SessionAndBearerTokens, K::CryptoMarker, false},
        {R"(0x[a-fA-F0-9]{64}\b)", C::CryptoWalletKeys, K::CryptoMarker, false},
        // Generic secret naming conventions.
        {R"(api[_\- ]?keys?)", C::ApiKeysAndCloud, K::GenericName, true},
        {R"(aws[_\-]?secret[_\-]?access[_\-]?key)", C::ApiKeysAndCloud, K::GenericName, true},
        {R"(access[_\-]?key[_\-]?id)", C::ApiKeysAndCloud, K::GenericName, true},
        {R"(service[_\- ]?account[_\-]?key)", C::ApiKeysAndCloud, K::GenericName, true},
        {R"(access[_\-]?tokens?)", C::OAuthTokens, K::GenericName, true},
        {R"(refresh[_\-]?tokens?)", C::OAuthTokens, K::GenericName, true},
        {R"(id[_\-]?tokens?)", C::OAuthTokens, K::GenericName, true},
        {R"(client[_\-]?secrets?)", C::OAuthTokens, K::GenericName, true},
        {R"(oauth)", C::OAuthTokens, K::GenericName, true},
        {R"((?:db|database)[_\-]?(?:pass(?:word)?|url|uri|user))", C::DatabaseCredentials, K::GenericName, true},
        {R"(connection[_\-]?string)", C::DatabaseCredentials, K::GenericName, true},
        {R"(passwords?)", C::PasswordsAndPassphrases, K::GenericName, true},
        {R"(passwd)", C::PasswordsAndPassphrases, K::GenericName, true},
        {R"(passphrases?)", C::PasswordsAndPassphrases, K::GenericName, true},
        {R"(secrets?)", C::PasswordsAndPassphrases, K::GenericName, true},
        {R"(credentials?)", C::PasswordsAndPassphrases, K::GenericName, true},
        {R"(creds?)", C::PasswordsAndPassphrases, K::GenericName, true},
        {R"(private[_\- ]?keys?)", C::SshTlsPrivateKeys, K::GenericName, true},
        {R"(ssh[_\-]?keys?)", C::SshTlsPrivateKeys, K::GenericName, true},
        {R"(client[_\-]?cert(?:ificate)?s?)", C::SshTlsPrivateKeys, K::GenericName, true},
        {R"(encryption[_\-]?keys?)", C::EncryptionKeys, K::GenericName, true},
        {R"(aes[_\-]?keys?)", C::EncryptionKeys, K::GenericName, true},
        {R"(master[_\-]?keys?)", C::EncryptionKeys, K::GenericName, true},
        {R"(fernet[_\-]?keys?)", C::EncryptionKeys, K::GenericName, true},
        {R"(tokens?)", C::SessionAndBearerTokens, K::GenericName, true},
        {R"(auth)", C::SessionAndBearerTokens, K::GenericName, true},
        {R"(bearer)", C::SessionAndBearerTokens, K::GenericName, true},
        {R"(cookies?)", C::SessionAndBearerTokens, K::GenericName, true},
        {R"(session[_\-]?(?:id|key|token|secret))", C::SessionAndBearerTokens, K::GenericName, true},
        {R"(jwt)", C::SessionAndBearerTokens, K::GenericName, true},
        {R"(webhook[_\-]?secrets?)", C::WebhookSecrets, K::GenericName, true},
        {R"(signing[_\-]?secrets?)", C::WebhookSecrets, K::GenericName, true},
        {R"(hmac[_\-]?secrets?)", C::WebhookSecrets, K::GenericName, true},
        {R"(mnemonics?)", C::CryptoWalletKeys, K::GenericName, true},
        {R"(seed[_\- ]?phrases?)", C::CryptoWalletKeys, K::GenericName, true},
        {R"(recovery[_\- ]?phrases?)", C::CryptoWalletKeys, K::GenericName, true},
        {R"(wallet[_\-]?(?:key|private[_\-]?key|secret))", C::CryptoWalletKeys, K::GenericName, true},
        {R"(bip[_\-]?39)", C::CryptoWalletKeys, K::GenericName, true},
    };
    return KeywordDictionary(entries);
}

std::vector<CredentialMatch> scan_text(std::string_view text, Stream stream, std::string_view file,
                                       const KeywordDictionary& dict) {
    return dict.scan(text, stream, file);
}

BundleFlags flag_bundle(const SkillBundle& bundle, const KeywordDictionary& dict) {
    BundleFlags flags;
    for (const auto& doc : bundle.nl_documents) {
        auto m = dict.scan(doc.text, Stream::NL, doc.relative_path);
        flags.nl_matches.insert(flags.nl_matches.end(), std::make_move_iterator(m.begin()),
                                std::make_move_iterator(m.end()));
    }
    for (const auto& src : bundle.source_files) {
        auto m = dict.scan(src.text, Stream::Code, src.relative_path);
        flags.code_matches.insert(flags.code_matches.end(), std::make_move_iterator(m.begin()),
                                  std::make_move_iterator(m.end()));
    }
    flags.excluded = flags.nl_matches.empty() && flags.code_matches.empty();
    return flags;
}

}  // namespace skillscan
