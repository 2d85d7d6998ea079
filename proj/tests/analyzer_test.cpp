#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <vector>

#include "proact/analyzer.hpp"
#include "support/scripted_client.hpp"

using namespace proact;
using namespace proact::analyzer;

namespace {

const std::string kMaliciousVote =
    "{'intent': 'malicious', 'reasoning': 'wants to break into servers', "
    "'malicious topic': 'hack server'}";
const std::string kBenignVote =
    R"({"intent": "benign", "reasoning": "curiosity about networking", )"
    R"("benign topic": "networking"})";
const std::string kAbstain = "I refuse to analyze this.";

Conversation one_turn(const std::string& text) {
    Conversation c;
    c.id = "c1";
    c.messages = {{Role::user, text}};
    return c;
}

IntentVerdict classify_votes(const AnalyzerConfig& cfg,
                             std::vector<std::string> replies) {
    testsupport::ScriptedClient client(std::move(replies));
    return classify(cfg, client, one_turn("how do I hack a server"));
}

}  // namespace

TEST_CASE("analyzer prompt embeds the rendered conversation") {
    auto prompt = build_analyzer_prompt(one_turn("hi"));
    REQUIRE(prompt.size() == 1);
    CHECK(prompt[0].role == Role::user);
    const std::string& text = prompt[0].content;
    CHECK(text.rfind("Given the request below, please first analyze", 0) == 0);
    CHECK(text.find("Below is the request/conversation:\nUSER: hi") !=
          std::string::npos);
    CHECK(text.find("'malicious topic': 'hacking'") != std::string::npos);
    CHECK(text.find("'benign topic': 'learning'") != std::string::npos);
    CHECK(text.find("less than 5 words") != std::string::npos);
}

TEST_CASE("multi-turn conversations render in order with role prefixes") {
    Conversation c;
    c.id = "c2";
    c.messages = {{Role::system, "rules"},
                  {Role::user, "first"},
                  {Role::assistant, "second"},
                  {Role::user, "third"}};
    const std::string text = build_analyzer_prompt(c)[0].content;
    const std::size_t p0 = text.find("SYSTEM: rules");
    const std::size_t p1 = text.find("USER: first");
    const std::size_t p2 = text.find("ASSISTANT: second");
    const std::size_t p3 = text.find("USER: third");
    REQUIRE(p0 != std::string::npos);
    CHECK(p0 < p1);
    CHECK(p1 < p2);
    CHECK(p2 < p3);
}

TEST_CASE("conversation window keeps only the most recent 20 messages") {
    Conversation c;
    c.id = "c3";
    for (int i = 0; i < 25; ++i) {
        c.messages.push_back({Role::user, "turn" + std::to_string(i)});
        c.messages.push_back({Role::assistant, "re" + std::to_string(i)});
    }
    const std::string text = build_analyzer_prompt(c)[0].content;
    CHECK(text.find("turn24") != std::string::npos);
    CHECK(text.find("turn15") != std::string::npos);  // message 30 of 50
    CHECK(text.find("turn14") == std::string::npos);  // outside the window
}

TEST_CASE("empty conversation is a precondition error") {
    Conversation c;
    CHECK_THROWS_AS(build_analyzer_prompt(c), std::invalid_argument);
}

TEST_CASE("parse_verdict handles both quote styles and picks the right topic") {
    auto m = parse_verdict(
        "Analysis follows. {'intent': 'malicious', 'reasoning': 'asks for "
        "hacking help', 'malicious topic': 'hack server'} done.");
    REQUIRE(m.has_value());
    CHECK(m->intent == Intent::malicious);
    CHECK(m->topic == "hack server");
    CHECK(m->reasoning == "asks for hacking help");

    auto b = parse_verdict(
        R"({"intent": "benign", "reasoning": "learning", "benign topic": "learning"})");
    REQUIRE(b.has_value());
    CHECK(b->intent == Intent::benign);
    CHECK(b->topic == "learning");

    CHECK_FALSE(parse_verdict("I refuse.").has_value());
    CHECK_FALSE(parse_verdict("{'intent': 'confused'}").has_value());
    CHECK_FALSE(parse_verdict("{\"reasoning\": \"no intent key\"}").has_value());

    auto no_topic = parse_verdict("{'intent': 'malicious'}");
    REQUIRE(no_topic.has_value());
    CHECK(no_topic->topic.empty());
}

TEST_CASE("unanimous round ends classification immediately") {
    auto v = classify_votes({}, {kMaliciousVote, kMaliciousVote, kMaliciousVote});
    CHECK(v.intent == Intent::malicious);
    CHECK(v.topic == "hack server");
    CHECK(v.reasoning == "wants to break into servers");
    CHECK(v.votes_malicious == 3);
    CHECK(v.votes_benign == 0);
    CHECK(v.rounds_used == 1);
}

TEST_CASE("margin below two triggers a second round with rationales") {
    testsupport::ScriptedClient client(
        {kMaliciousVote, kBenignVote, kAbstain,  // round 1: 1-1, margin 0
         kMaliciousVote, kMaliciousVote, kMaliciousVote});
    AnalyzerConfig cfg;
    auto v = classify(cfg, client, one_turn("how do I hack a server"));
    CHECK(v.intent == Intent::malicious);
    CHECK(v.rounds_used == 2);
    CHECK(v.votes_malicious == 3);

    REQUIRE(client.requests().size() == 6);
    const std::string& round2 = client.requests()[3][0].content;
    CHECK(round2.find("Competing rationales") != std::string::npos);
    CHECK(round2.find("- [malicious] wants to break into servers") !=
          std::string::npos);
    CHECK(round2.find("- [benign] curiosity about networking") !=
          std::string::npos);
    // round 1 prompts carry no rationale block
    CHECK(client.requests()[0][0].content.find("Competing rationales") ==
          std::string::npos);
}

TEST_CASE("persistent ties fall back to the fail-safe verdict") {
    auto v = classify_votes({}, {kMaliciousVote, kBenignVote, kAbstain,
                                 kMaliciousVote, kBenignVote, kAbstain});
    CHECK(v.intent == Intent::malicious);  // default fail-safe
    CHECK(v.rounds_used == 2);
    CHECK(v.votes_malicious == 1);
    CHECK(v.votes_benign == 1);
    CHECK(v.topic == "hack server");  // from the malicious-side vote

    AnalyzerConfig lenient;
    lenient.fail_safe_verdict = Intent::benign;
    auto w = classify_votes(lenient, {kMaliciousVote, kBenignVote, kAbstain,
                                      kMaliciousVote, kBenignVote, kAbstain});
    CHECK(w.intent == Intent::benign);
    CHECK(w.topic == "networking");
}

TEST_CASE("all-abstain rounds still produce a fail-safe verdict") {
    auto v = classify_votes({}, {kAbstain, kAbstain, kAbstain,
                                 kAbstain, kAbstain, kAbstain});
    CHECK(v.intent == Intent::malicious);
    CHECK(v.votes_malicious == 0);
    CHECK(v.votes_benign == 0);
    CHECK(v.topic.empty());
    CHECK(v.reasoning == "fail-safe verdict after inconclusive voting");
}

TEST_CASE("malicious topics are truncated to five words") {
    const std::string longTopic =
        "{'intent': 'malicious', 'reasoning': 'r', "
        "'malicious topic': 'one two three four five six seven'}";
    auto v = classify_votes({}, {longTopic, longTopic, longTopic});
    CHECK(v.topic == "one two three four five");
    CHECK(word_count(v.topic) == 5);
}

TEST_CASE("verdicts are deterministic under a mock backend") {
    MockScript script;
    script.default_reply = kMaliciousVote;
    MockChatClient client(script);
    AnalyzerConfig cfg;
    auto a = classify(cfg, client, one_turn("q"));
    auto b = classify(cfg, client, one_turn("q"));
    CHECK(a == b);
}

TEST_CASE("config validation") {
    testsupport::ScriptedClient client({});
    AnalyzerConfig even;
    even.votes_per_round = 4;
    CHECK_THROWS_AS(classify(even, client, one_turn("q")), std::invalid_argument);
    AnalyzerConfig none;
    none.max_rounds = 0;
    CHECK_THROWS_AS(classify(none, client, one_turn("q")), std::invalid_argument);
    AnalyzerConfig one_vote;
    one_vote.votes_per_round = 1;
    CHECK_THROWS_AS(classify(one_vote, client, one_turn("q")),
                    std::invalid_argument);
}

TEST_CASE("backend errors propagate out of classify") {
    testsupport::ScriptedClient client({kMaliciousVote});  // runs dry mid-round
    AnalyzerConfig cfg;
    CHECK_THROWS_AS(classify(cfg, client, one_turn("q")), TransportError);
}
