#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "common/fnv.hpp"
#include "taskgen/dataset.hpp"
#include "taskgen/generators.hpp"
#include "taskgen/program.hpp"
#include "taskgen/split.hpp"
#include "oracles.hpp"
#include "taskgen/task.hpp"

using namespace s2g;
using namespace s2g::task;
using namespace s2g::oracle;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / (std::string("s2g_taskgen_") +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name() + "_" +
                                        std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(NumberSequence, WorkedExamples) {
  auto e = number_sequence_from({7008, -205, 4}, 4);
  EXPECT_EQ(joined(e.input), "7008 -205 4 7221$");
  EXPECT_EQ(joined(e.target), "14233$");
  EXPECT_EQ(joined(number_sequence_from({0, 0, 0}, 5).target), "0$");
  auto f = number_sequence_from({1, 2, 3}, 4);
  EXPECT_EQ(joined(f.input), "1 2 3 5$");
  EXPECT_EQ(joined(f.target), "9$");
}

TEST(NumberSequence, MatchesRecursionOracle) {
  ad::Rng rng(51);
  for (int n = 0; n < 10000; ++n) {
    const int length = static_cast<int>(rng.uniform_int(1, 8)), terms = static_cast<int>(rng.uniform_int(4, 8));
    auto ex = gen_number_sequence({length, terms}, rng);
    auto words = split_ws(strip_eos(joined(ex.input)));
    ASSERT_EQ(static_cast<int>(words.size()), terms);
    bool exact = false;
    for (int i = 0; i < 3; ++i) {
      const std::string m = parse_dec(words[i]).mag;
      ASSERT_LE(static_cast<int>(m.size()), length);
      exact = exact || static_cast<int>(m.size()) == length;
    }
    EXPECT_TRUE(exact);
    std::vector<Dec> a;
    for (int i = 0; i < 3; ++i) a.push_back(parse_dec(words[i]));
    while (static_cast<int>(a.size()) <= terms) {
      const auto k = a.size();
      a.push_back(add(negate(a[k - 2]), add(add(a[k - 1], a[k - 1]), a[k - 3])));
    }
    for (int i = 3; i < terms; ++i) ASSERT_EQ(words[i], str(a[i]));
    ASSERT_EQ(joined(ex.target), str(a[terms]) + "$");
  }
}

TEST(ToyAddition, WorkedExamplesAndAlignment) {
  EXPECT_EQ(joined(toy_addition_from("5872", "13").input), "5872+13$");
  EXPECT_EQ(joined(toy_addition_from("5872", "13").target), "5885$");
  EXPECT_EQ(joined(toy_addition_from("0", "0").target), "0$");

  auto rows = aligned_rows("5872", "13");
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) ASSERT_EQ(r.size(), kAlignedWidth);
  std::size_t c2 = 99, c3 = 99;
  for (std::size_t j = 0; j < kAlignedWidth; ++j) {
    if (rows[0][j] == "2") c2 = j;
    if (rows[1][j] == "3") c3 = j;
    EXPECT_EQ(rows[2][j], "");
  }
  EXPECT_EQ(c2, c3);
  auto ex = toy_addition_from("5872", "13", ToyLayout::AlignedGrid);
  EXPECT_EQ(ex.input.size(), 3 * kAlignedWidth);
  EXPECT_EQ(joined(ex.target), "5885$");
}

TEST(ToyAddition, MatchesAdditionOracle) {
  ad::Rng rng(52);
  for (int n = 0; n < 10000; ++n) {
    const int k = static_cast<int>(rng.uniform_int(1, 12));
    auto ex = gen_toy_addition({k}, rng);
    const std::string in = strip_eos(joined(ex.input));
    const auto plus = in.find('+');
    ASSERT_NE(plus, std::string::npos);
    const std::string a = in.substr(0, plus), b = in.substr(plus + 1);
    ASSERT_LE(static_cast<int>(std::max(a.size(), b.size())), k);
    EXPECT_EQ(static_cast<int>(std::max(a.size(), b.size())), k);
    ASSERT_EQ(joined(ex.target), add_mag(a, b) + "$");
  }
}

TEST(AddSub, WorkedExamples) {
  const auto& t = addsub_templates();
  ASSERT_EQ(t.size(), 8u);
  EXPECT_EQ(t[0].pattern, "What is {A} take away {B}?");
  auto e = addsub_from(0, "-784518", "7323");
  EXPECT_EQ(joined(e.input), "What is -784518 take away 7323?$");
  EXPECT_EQ(joined(e.target), "-791841$");
  EXPECT_EQ(joined(addsub_from(0, "0", "0").target), "0$");
  auto f = addsub_from(1, "123", "456");
  EXPECT_EQ(joined(f.input), "Add 123 and 456.$");
  EXPECT_EQ(joined(f.target), "579$");
  EXPECT_EQ(count_digits("What is -784518 take away 7323?"), 10);
}

TEST(AddSub, MatchesArithmeticOracle) {
  ad::Rng rng(53);
  std::vector<std::regex> res;
  for (const auto& t : addsub_templates()) res.push_back(template_regex(t.pattern));
  for (int n = 0; n < 10000; ++n) {
    const bool ood = n % 4 == 0;
    const int entropy = ood ? static_cast<int>(rng.uniform_int(34, 40)) : static_cast<int>(rng.uniform_int(2, 20));
    auto ex = gen_addsub_word({entropy}, rng, ood);
    const std::string in = strip_eos(joined(ex.input));
    std::smatch m;
    std::size_t which = res.size();
    for (std::size_t i = 0; i < res.size(); ++i)
      if (std::regex_match(in, m, res[i])) {
        which = i;
        break;
      }
    ASSERT_LT(which, res.size()) << in;
    // {B} may precede {A} in the pattern
    const auto& pat = addsub_templates()[which].pattern;
    const bool b_first = pat.find("{B}") < pat.find("{A}");
    const Dec a = parse_dec(m[b_first ? 2 : 1]), b = parse_dec(m[b_first ? 1 : 2]);
    ASSERT_EQ(static_cast<int>(a.mag.size() + b.mag.size()), entropy) << in;
    if (ood) {
      EXPECT_GE(a.mag.size(), 17u);
      EXPECT_GE(b.mag.size(), 17u);
    } else {
      EXPECT_LE(a.mag.size(), 16u);
      EXPECT_LE(b.mag.size(), 16u);
    }
    const Dec r = addsub_templates()[which].subtract ? add(a, negate(b)) : add(a, b);
    ASSERT_EQ(joined(ex.target), str(r) + "$") << in;
  }
}

TEST(Program, WorkedExamples) {
  auto ex = program_from("j=891\nfor x in range(11):j-=878\nprint((368 if 821<874 else j))", {2, 3});
  EXPECT_EQ(joined(ex.target), "368$");
  EXPECT_EQ(ex.input.back(), "$");
  EXPECT_EQ(eval_program("print(0)"), "0\n");
  EXPECT_EQ(eval_program("print((11*7288719))"), "80175909\n");
  EXPECT_EQ(eval_program("b=6367476\nfor x in range(19):b-=9082877\nprint((3569363 if 7448172<9420320 else b))"),
            "3569363\n");
  EXPECT_EQ(eval_program("print(1)"), "1\n");
  EXPECT_EQ(eval_program("e=(450693 if 4556818<2999168 else 3618338)\nfor x in range(10):e-=4489485\nprint(e)"),
            "-41276512\n");
}

TEST(Program, RejectsForeignSyntax) {
  EXPECT_THROW(eval_program("import os"), ParseError);
  EXPECT_THROW(eval_program("print((1 if 2<3))"), ParseError);
  EXPECT_THROW(eval_program("print(q)"), ParseError);
}

TEST(Program, InstructionBuckets) {
  auto t = instruction_types("j=891\nfor x in range(11):j-=878\nprint((368 if 821<874 else j))");
  EXPECT_NE(std::find(t.begin(), t.end(), "for"), t.end());
  EXPECT_NE(std::find(t.begin(), t.end(), "if-else"), t.end());
  EXPECT_EQ(std::find(t.begin(), t.end(), "*"), t.end());
  EXPECT_EQ(instruction_types("print((11*7288719))"), (std::vector<std::string>{"*"}));
}

TEST(Program, MatchesPythonInterpreter) {
  TempDir tmp;
  ad::Rng rng(54);
  const auto ranges = default_ranges(Task::Program);
  std::vector<std::string> snippets, expected;
  for (int n = 0; n < 10000; ++n) {
    const bool ood = n % 5 == 0;
    auto params = sample_params(ood ? ranges.ood : ranges.train, rng);
    snippets.push_back(gen_program_text(params, rng));
    expected.push_back(eval_program(snippets.back()));
  }
  auto got = python_outputs(snippets, tmp.path);
  if (!got) GTEST_SKIP() << "python3 not available";
  ASSERT_EQ(got->size(), snippets.size());
  for (std::size_t i = 0; i < snippets.size(); ++i) ASSERT_EQ((*got)[i], expected[i]) << snippets[i];
}

TEST(Program, LiteralDigitCounts) {
  ad::Rng rng(55);
  for (int n = 0; n < 500; ++n) {
    const int length = static_cast<int>(rng.uniform_int(1, 5));
    const auto text = gen_program_text({2, length}, rng);
    // range() counts are loop bounds, not literals
    const std::string lits = std::regex_replace(text, std::regex(R"(range\([0-9]+\))"), "range()");
    int longest = 0;
    const std::regex num("[0-9]+");
    for (std::sregex_iterator it(lits.begin(), lits.end(), num), e; it != e; ++it)
      longest = std::max(longest, static_cast<int>(it->length()));
    EXPECT_EQ(longest, length) << text;
  }
}

TEST(HashSplit, DeterministicAndDisjoint) {
  const auto ranges = SplitRanges::parse("train=1-2:4-5;id=1-2:4-5;ood=3:6-7", 2);
  ad::Rng rng(56);
  std::set<std::string> train, id;
  for (int n = 0; n < 100000; ++n) {
    auto ex = gen_number_sequence(sample_params(ranges.train, rng), rng);
    const Split s = hash_split(ex, ranges);
    ASSERT_EQ(hash_split(ex, ranges), s);
    ASSERT_NE(s, Split::OodTest);
    if (s == Split::Train) train.insert(canonical_input(ex));
    if (s == Split::IdTest) id.insert(canonical_input(ex));
  }
  for (const auto& k : id) ASSERT_EQ(train.count(k), 0u);
  // the ID band is about a tenth
  const double frac = static_cast<double>(id.size()) / static_cast<double>(id.size() + train.size());
  EXPECT_NEAR(frac, 0.1, 0.03);
}

TEST(HashSplit, OodNeverLandsInTrain) {
  const auto ranges = default_ranges(Task::NumberSequence);
  ad::Rng rng(57);
  for (int n = 0; n < 2000; ++n) {
    auto ex = gen_number_sequence(sample_params(ranges.ood, rng), rng);
    ASSERT_EQ(hash_split(ex, ranges), Split::OodTest);
  }
  Example e;
  e.input = {"1", "$"};
  e.difficulty = {99, 99};
  EXPECT_EQ(hash_split(e, ranges), Split::Discard);
  EXPECT_EQ(input_hash(e), fnv1a64("1$"));
}

TEST(SplitRanges, ParseAndValidate) {
  auto r = SplitRanges::parse("train=1-3:4-5;id=1-3:4-5;ood=4:6-7", 2);
  EXPECT_EQ(r.train[0].lo, 1);
  EXPECT_EQ(r.train[1].hi, 5);
  EXPECT_EQ(r.ood[0].lo, 4);
  EXPECT_EQ(r.ood[0].hi, 4);
  EXPECT_EQ(SplitRanges::parse(r.str(), 2).str(), r.str());
  EXPECT_NO_THROW(r.validate(2));
  EXPECT_THROW(SplitRanges::parse("train=3-1;id=1-2", 1).validate(1), ConfigError);
  EXPECT_THROW(SplitRanges::parse("train=1-3;id=1-3;ood=2-5", 1).validate(1), ConfigError);
  EXPECT_THROW(SplitRanges::parse("train=1-3:2;id=1-3:2", 2).validate(1), ConfigError);
  EXPECT_THROW(SplitRanges::parse("train=a-b;id=1", 1), ConfigError);
  EXPECT_THROW(SplitRanges::parse("id=1-3", 1), ConfigError);
  for (Task t : {Task::NumberSequence, Task::ToyAddition, Task::AddSub, Task::Program})
    EXPECT_NO_THROW(default_ranges(t).validate(difficulty_names(t).size())) << task_name(t);
}

TEST(GenerateSplit, ReproducibleAndInRange) {
  GenerateOptions o;
  o.task = Task::NumberSequence;
  o.ranges = default_ranges(o.task);
  o.seed = 7;
  auto a = generate_split(o, Split::Train, 300), b = generate_split(o, Split::Train, 300);
  EXPECT_EQ(a, b);
  o.seed = 8;
  EXPECT_NE(generate_split(o, Split::Train, 300), a);
  for (Split s : {Split::Train, Split::IdTest, Split::OodTest}) {
    for (const auto& ex : generate_split(o, s, 200)) {
      EXPECT_TRUE(contains(o.ranges.of(s), ex.difficulty));
      EXPECT_EQ(hash_split(ex, o.ranges), s);
    }
  }
}

TEST(Dataset, FileRoundTrip) {
  TempDir tmp;
  GenerateOptions o;
  o.task = Task::Program;
  o.ranges = default_ranges(o.task);
  auto ex = generate_split(o, Split::Train, 50);
  write_dataset(tmp.path / "train.tsv", ex, false);
  EXPECT_EQ(read_dataset(tmp.path / "train.tsv", false), ex);

  std::vector<Example> cls(2);
  cls[0].input = {"<cls>", "where", "<sep>", "mary"};
  cls[0].label = "bathroom";
  cls[1].input = {"<cls>", " ", "<sep>", "\t"};
  cls[1].label = "x";
  write_dataset(tmp.path / "c.tsv", cls, true);
  EXPECT_EQ(read_dataset(tmp.path / "c.tsv", true), cls);

  std::ofstream(tmp.path / "bad.tsv") << "1 2 $\n";
  try {
    read_dataset(tmp.path / "bad.tsv", false);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.tsv:1"), std::string::npos) << e.what();
  }
}

TEST(Dataset, MetaRoundTrip) {
  TempDir tmp;
  DatasetMeta m;
  m.task = Task::AddSub;
  m.ranges = default_ranges(m.task);
  m.seed = 99;
  m.width = 40;
  m.train_count = 10;
  m.id_count = 2;
  m.ood_count = 3;
  write_meta(tmp.path, m);
  auto r = read_meta(tmp.path);
  EXPECT_EQ(r.serialize(), m.serialize());
  EXPECT_EQ(r.task, Task::AddSub);
  EXPECT_EQ(r.ranges.str(), m.ranges.str());
  EXPECT_THROW(DatasetMeta::parse("task=sequence\n"), ParseError);
  EXPECT_EQ(split_file(Split::IdTest), "id_test.tsv");
}

TEST(Vocab, BuildFromCorpus) {
  std::vector<Example> ex{toy_addition_from("12", "9"), toy_addition_from("5", "50")};
  auto v = build_vocab(ex);
  EXPECT_EQ(v.token(0), "<pad>");
  EXPECT_EQ(v.token(2), "$");
  EXPECT_EQ(v.token(5), "1");
  EXPECT_EQ(v.token(6), "2");
  EXPECT_EQ(v.token(7), "+");
  EXPECT_EQ(build_vocab(ex), v);
  EXPECT_THROW(build_vocab({}), ConfigError);
}

TEST(Babi, ParsesStoriesAndQuestions) {
  TempDir tmp;
  std::ofstream(tmp.path / "qa1_single-supporting-fact_train.txt")
      << "1 Mary moved to the bathroom.\n2 Where is Mary?\tbathroom\t1\n3 John went to the hallway.\n"
         "4 Where is John?\thallway\t3\n1 Sandra journeyed to the garden.\n2 Where is Sandra?\tgarden\t1\n";
  std::ofstream(tmp.path / "qa1_single-supporting-fact_test.txt") << "1 Bob ran.\n2 Who ran?\tbob\t1\n";
  auto ex = load_babi(tmp.path, "train");
  ASSERT_EQ(ex.size(), 3u);
  EXPECT_EQ(ex[0].input, (std::vector<std::string>{"<cls>", "where", "is", "mary", "?", "<sep>", "mary", "moved", "to",
                                                  "the", "bathroom", "."}));
  EXPECT_EQ(ex[0].label, "bathroom");
  EXPECT_EQ(ex[1].input.size(), 1 + 4 + 1 + 12u);
  // numbering restarts at 1: story cleared
  EXPECT_EQ(ex[2].input, (std::vector<std::string>{"<cls>", "where", "is", "sandra", "?", "<sep>", "sandra", "journeyed",
                                                  "to", "the", "garden", "."}));
  EXPECT_EQ(load_babi(tmp.path, "test").size(), 1u);
  EXPECT_EQ(babi_words("Where's  Mary-Jane, now?"), (std::vector<std::string>{"where's", "mary-jane", ",", "now", "?"}));
}

TEST(Babi, MalformedLineReportsPosition) {
  TempDir tmp;
  std::ofstream(tmp.path / "qa3_x_train.txt") << "1 Mary moved.\n2 Where is Mary?\tbathroom\t1\nfoo bar\n";
  try {
    load_babi(tmp.path, "train");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("qa3_x_train.txt:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_babi(tmp.path / "missing", "train"), ParseError);
}
