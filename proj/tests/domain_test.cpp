#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "proact/domain.hpp"

using namespace proact;

namespace {

Conversation conv(std::vector<ChatMessage> messages) {
    Conversation c;
    c.id = "test";
    c.messages = std::move(messages);
    return c;
}

}  // namespace

TEST_CASE("validate_conversation accepts legal shapes") {
    CHECK(validate_conversation(conv({{Role::user, "hi"}})) == std::nullopt);
    CHECK(validate_conversation(conv({{Role::system, "be nice"},
                                      {Role::user, "hi"}})) == std::nullopt);
    CHECK(validate_conversation(conv({{Role::user, "hi"},
                                      {Role::assistant, "hello"},
                                      {Role::user, "more"}})) == std::nullopt);
    // assistant placeholders may be empty
    CHECK(validate_conversation(conv({{Role::user, "hi"},
                                      {Role::assistant, ""}})) == std::nullopt);
}

TEST_CASE("validate_conversation reports the first violation") {
    CHECK(validate_conversation(conv({})) == "empty conversation");
    CHECK(validate_conversation(conv({{Role::user, "a"}, {Role::user, "b"}})) ==
          "non-alternating roles");
    CHECK(validate_conversation(conv({{Role::assistant, "hello"}})) ==
          "non-alternating roles");
    CHECK(validate_conversation(conv({{Role::user, "a"},
                                      {Role::assistant, "b"},
                                      {Role::system, "late"}})) ==
          "non-alternating roles");
    CHECK(validate_conversation(conv({{Role::user, ""}})) ==
          "empty user message content");
    CHECK(validate_conversation(conv({{Role::system, ""}, {Role::user, "x"}})) ==
          "empty system message content");
}

TEST_CASE("enum serialization round-trips") {
    for (Role r : {Role::system, Role::user, Role::assistant})
        CHECK(role_from_string(to_string(r)) == r);
    for (Intent i : {Intent::malicious, Intent::benign})
        CHECK(intent_from_string(to_string(i)) == i);
    for (Strategy s : {Strategy::emoji, Strategy::rot13, Strategy::binary,
                       Strategy::base64, Strategy::hex, Strategy::morse,
                       Strategy::free_form})
        CHECK(strategy_from_name(strategy_name(s)) == s);
    for (Verdict v : {Verdict::safe, Verdict::unsafe})
        CHECK(verdict_from_string(to_string(v)) == v);
    for (JudgeKind k :
         {JudgeKind::surrogate, JudgeKind::attacker, JudgeKind::ground_truth})
        CHECK(judge_kind_from_string(to_string(k)) == k);
    for (AttackOutcome o :
         {AttackOutcome::attacker_success, AttackOutcome::attacker_exhausted})
        CHECK(attack_outcome_from_string(to_string(o)) == o);

    CHECK(strategy_name(Strategy::free_form) == "free");
    CHECK(role_from_string("nonsense") == std::nullopt);
    CHECK(strategy_from_name("") == std::nullopt);
}

TEST_CASE("word_count counts whitespace-separated tokens") {
    CHECK(word_count("") == 0);
    CHECK(word_count("   ") == 0);
    CHECK(word_count("one") == 1);
    CHECK(word_count("making explosives at home") == 4);
    CHECK(word_count("  padded   words \t here\n") == 3);
}

TEST_CASE("truncate_words keeps the first n tokens") {
    CHECK(truncate_words("a b c d e f", 5) == "a b c d e");
    CHECK(truncate_words("a b", 5) == "a b");
    CHECK(truncate_words("", 5) == "");
    CHECK(truncate_words("  x   y  ", 1) == "x");
}
