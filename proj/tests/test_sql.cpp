#include <doctest.h>

#include <set>

#include "schemalink/errors.hpp"
#include "schemalink/ground_truth.hpp"
#include "schemalink/sql.hpp"
#include "test_util.hpp"

using namespace schemalink;
using namespace schemalink::testing;

TEST_SUITE_BEGIN("sql_analysis");

namespace {

RoleSet roles(std::initializer_list<Role> list) { return RoleSet(list); }

const char* kGroupedMakersSql =
    "SELECT T1.FullName, T1.Id FROM CAR_MAKERS AS T1 JOIN MODEL_LIST AS T2 "
    "ON T1.Id = T2.Maker GROUP BY T1.Id HAVING count(*) > 3";

}  // namespace

TEST_CASE("aliased grouped join resolves to the expected role map") {
    auto catalog = fixture_catalog();
    const DatabaseSchema& car = schema_by_id(catalog, "car_1");

    SchemaLink link = extract_ground_truth(kGroupedMakersSql, car, "q0");
    REQUIRE(link.entries.size() == 3);
    CHECK(link.entries.at({"car_makers", "fullname"}).roles == roles({Role::Selected}));
    CHECK(link.entries.at({"car_makers", "id"}).roles ==
          roles({Role::Selected, Role::Join, Role::Group}));
    CHECK(link.entries.at({"model_list", "maker"}).roles == roles({Role::Join}));

    // The aggregate-only HAVING touches no column: no condition role anywhere.
    for (const auto& [qc, entry] : link.entries) CHECK_FALSE(entry.roles.contains(Role::Condition));
}

TEST_CASE("count(*) marks only the first-column fallback") {
    auto catalog = fixture_catalog();
    const DatabaseSchema& singers = schema_by_id(catalog, "concert_singer");
    SchemaLink link = extract_ground_truth("SELECT COUNT(*) FROM singer", singers);
    REQUIRE(link.entries.size() == 1);
    const LinkEntry& entry = link.entries.at({"singer", "singer_id"});
    CHECK(entry.fallback);
    CHECK(entry.roles.empty());
}

TEST_CASE("join with order by resolves unqualified columns across tables") {
    auto catalog = fixture_catalog();
    const DatabaseSchema& books = schema_by_id(catalog, "book_publication");
    SchemaLink link = extract_ground_truth(
        "SELECT title FROM book JOIN publication ON book.book_id = publication.book_id "
        "ORDER BY price DESC",
        books);
    REQUIRE(link.entries.size() == 4);
    CHECK(link.entries.at({"book", "title"}).roles == roles({Role::Selected}));
    CHECK(link.entries.at({"book", "book_id"}).roles == roles({Role::Join}));
    CHECK(link.entries.at({"publication", "book_id"}).roles == roles({Role::Join}));
    CHECK(link.entries.at({"publication", "price"}).roles == roles({Role::Order}));
}

TEST_CASE("parser basics") {
    sql::Query trivial = sql::parse_sql("SELECT 1");
    REQUIRE(trivial.cores.size() == 1);
    CHECK(trivial.cores[0].select_list.size() == 1);
    CHECK(trivial.cores[0].from.empty());

    CHECK_THROWS_AS(sql::parse_sql("SELECT FROM WHERE"), ParseError);
    try {
        sql::parse_sql("SELECT a FROM t WHERE");
    } catch (const ParseError& err) {
        CHECK(err.has_position());
    }

    // Unknown alias is a resolution error at parse time.
    CHECK_THROWS_AS(sql::parse_sql("SELECT x.a FROM t"), ResolutionError);
}

TEST_CASE("ambiguous unqualified column is an error") {
    DatabaseSchema schema = generator_schema();
    schema.tables[1].columns.push_back({"a_name", ColumnType::Text});
    schema.validate();
    CHECK_THROWS_WITH_AS(extract_ground_truth("SELECT a_name FROM alpha, beta", schema),
                         doctest::Contains("ambiguous"), ResolutionError);
}

TEST_CASE("unknown column names the offender") {
    DatabaseSchema schema = generator_schema();
    CHECK_THROWS_WITH_AS(extract_ground_truth("SELECT no_such FROM alpha", schema),
                         doctest::Contains("no_such"), IntegrityError);
    CHECK_THROWS_WITH_AS(extract_ground_truth("SELECT a_name FROM missing", schema),
                         doctest::Contains("missing"), IntegrityError);
}

TEST_CASE("select star expands, count star does not") {
    DatabaseSchema schema = generator_schema();
    SchemaLink star = extract_ground_truth("SELECT * FROM beta", schema);
    CHECK(star.entries.size() == schema.tables[1].columns.size());
    for (const auto& [qc, entry] : star.entries) {
        CHECK(entry.roles == roles({Role::Selected}));
    }

    SchemaLink qualified = extract_ground_truth("SELECT beta.* FROM alpha, beta", schema);
    CHECK(qualified.entries.size() == schema.tables[1].columns.size() + 1);
    CHECK(qualified.entries.at({"alpha", "a_key"}).fallback);
}

TEST_CASE("set operations merge branch links") {
    DatabaseSchema schema = generator_schema();
    SchemaLink link = extract_ground_truth(
        "SELECT a_name FROM alpha WHERE a_size > 3 UNION SELECT b_label FROM beta", schema);
    CHECK(link.entries.at({"alpha", "a_name"}).roles == roles({Role::Selected}));
    CHECK(link.entries.at({"alpha", "a_size"}).roles == roles({Role::Condition}));
    CHECK(link.entries.at({"beta", "b_label"}).roles == roles({Role::Selected}));
}

TEST_CASE("subquery columns take roles from their own clauses") {
    DatabaseSchema schema = generator_schema();
    SchemaLink link = extract_ground_truth(
        "SELECT a_name FROM alpha WHERE a_score > (SELECT AVG(b_level) FROM beta)", schema);
    CHECK(link.entries.at({"alpha", "a_score"}).roles == roles({Role::Condition}));
    // The subquery's aggregate argument is selected there, not condition here.
    CHECK(link.entries.at({"beta", "b_level"}).roles == roles({Role::Selected}));
}

TEST_CASE("where equi-join keeps the condition role and is flagged for audit") {
    DatabaseSchema schema = generator_schema();
    std::vector<AuditNote> notes;
    SchemaLink link = extract_ground_truth(
        "SELECT a_name FROM alpha, beta WHERE a_key = b_ref", schema, "q7", &notes);
    CHECK(link.entries.at({"alpha", "a_key"}).roles == roles({Role::Condition}));
    CHECK(link.entries.at({"beta", "b_ref"}).roles == roles({Role::Condition}));
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].kind == "where_equijoin");
    CHECK(notes[0].detail == "alpha.a_key = beta.b_ref");
}

TEST_CASE("order by wrapped in an aggregate is assigned and noted") {
    DatabaseSchema schema = generator_schema();
    std::vector<AuditNote> notes;
    SchemaLink link = extract_ground_truth(
        "SELECT a_city FROM alpha GROUP BY a_city ORDER BY SUM(a_score) DESC", schema, "q8",
        &notes);
    CHECK(link.entries.at({"alpha", "a_score"}).roles == roles({Role::Order}));
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].kind == "order_by_aggregate");
}

TEST_CASE("derived tables pass roles through to base columns") {
    DatabaseSchema schema = generator_schema();
    SchemaLink link = extract_ground_truth(
        "SELECT t.b_ref FROM (SELECT b_ref FROM beta WHERE b_count > 2) AS t", schema);
    CHECK(link.entries.at({"beta", "b_ref"}).roles == roles({Role::Selected}));
    CHECK(link.entries.at({"beta", "b_count"}).roles == roles({Role::Condition}));
}

TEST_CASE("group by select alias and output position resolve") {
    DatabaseSchema schema = generator_schema();
    SchemaLink by_alias = extract_ground_truth(
        "SELECT a_city AS place, COUNT(*) FROM alpha GROUP BY place", schema);
    CHECK(by_alias.entries.at({"alpha", "a_city"}).roles ==
          roles({Role::Selected, Role::Group}));

    SchemaLink by_position =
        extract_ground_truth("SELECT a_city, COUNT(*) FROM alpha GROUP BY 1 ORDER BY 2", schema);
    CHECK(by_position.entries.at({"alpha", "a_city"}).roles ==
          roles({Role::Selected, Role::Group}));
}

TEST_CASE("case expression predicates are conditions, results are selected") {
    DatabaseSchema schema = generator_schema();
    SchemaLink link = extract_ground_truth(
        "SELECT CASE WHEN a_score > 5 THEN a_name ELSE a_city END FROM alpha", schema);
    CHECK(link.entries.at({"alpha", "a_score"}).roles == roles({Role::Condition}));
    CHECK(link.entries.at({"alpha", "a_name"}).roles == roles({Role::Selected}));
    CHECK(link.entries.at({"alpha", "a_city"}).roles == roles({Role::Selected}));
}

TEST_CASE("extraction is a pure function") {
    auto catalog = fixture_catalog();
    const DatabaseSchema& car = schema_by_id(catalog, "car_1");
    SchemaLink first = extract_ground_truth(kGroupedMakersSql, car, "q");
    SchemaLink second = extract_ground_truth(kGroupedMakersSql, car, "q");
    CHECK(first == second);
}

TEST_CASE("template generator is the role oracle") {
    DatabaseSchema schema = generator_schema();
    SplitMix64 rng(20240811);
    for (int i = 0; i < 300; ++i) {
        TemplateCase tc = make_template_case(rng, schema);
        CAPTURE(tc.sql);
        SchemaLink link = extract_ground_truth(tc.sql, schema);
        REQUIRE(link.entries.size() == tc.expected.size());
        for (const auto& [qc, expected_entry] : tc.expected) {
            REQUIRE(link.contains(qc));
            CHECK(link.entries.at(qc).roles == expected_entry.roles);
            CHECK(link.entries.at(qc).fallback == expected_entry.fallback);
        }
    }
}

TEST_CASE("alias renaming never changes the link") {
    DatabaseSchema schema = generator_schema();
    for (int i = 0; i < 100; ++i) {
        SplitMix64 rng_a(7000 + i);
        SplitMix64 rng_b(7000 + i);
        TemplateCase original = make_template_case(rng_a, schema, "T1", "T2");
        TemplateCase renamed = make_template_case(rng_b, schema, "X", "Y");
        SchemaLink a = extract_ground_truth(original.sql, schema, "q");
        SchemaLink b = extract_ground_truth(renamed.sql, schema, "q");
        CHECK(a == b);
    }
}

TEST_CASE("realistic cross-database query shapes extract cleanly") {
    // A three-table bridge schema plus a self-referencing table, the two
    // shapes that dominate real cross-database benchmarks.
    DatabaseSchema schema;
    schema.db_id = "campus";
    Table student;
    student.name = "student";
    student.columns = {{"stuid", ColumnType::Number}, {"lname", ColumnType::Text},
                       {"fname", ColumnType::Text}, {"age", ColumnType::Number},
                       {"major", ColumnType::Number}, {"advisor", ColumnType::Number}};
    student.primary_keys = {"stuid"};
    Table has_pet;
    has_pet.name = "has_pet";
    has_pet.columns = {{"stuid", ColumnType::Number}, {"petid", ColumnType::Number}};
    has_pet.foreign_keys = {{"stuid", "student", "stuid"}, {"petid", "pets", "petid"}};
    Table pets;
    pets.name = "pets";
    pets.columns = {{"petid", ColumnType::Number}, {"pettype", ColumnType::Text},
                    {"pet_age", ColumnType::Number}, {"weight", ColumnType::Number}};
    pets.primary_keys = {"petid"};
    Table employee;
    employee.name = "employee";
    employee.columns = {{"emp_id", ColumnType::Number}, {"name", ColumnType::Text},
                        {"salary", ColumnType::Number}, {"manager_id", ColumnType::Number}};
    employee.primary_keys = {"emp_id"};
    employee.foreign_keys = {{"manager_id", "employee", "emp_id"}};
    schema.tables = {student, has_pet, pets, employee};
    schema.validate();

    SchemaLink bridge = extract_ground_truth(
        "SELECT T1.fname, T1.age FROM student AS T1 JOIN has_pet AS T2 ON T1.stuid = T2.stuid "
        "JOIN pets AS T3 ON T2.petid = T3.petid WHERE T3.pettype = 'dog' AND T3.pet_age > 3",
        schema);
    CHECK(bridge.entries.size() == 8);
    CHECK(bridge.entries.at({"has_pet", "stuid"}).roles == RoleSet({Role::Join}));
    CHECK(bridge.entries.at({"has_pet", "petid"}).roles == RoleSet({Role::Join}));
    CHECK(bridge.entries.at({"pets", "pettype"}).roles == RoleSet({Role::Condition}));

    SchemaLink nested = extract_ground_truth(
        "SELECT count(*) FROM student WHERE age > (SELECT avg(age) FROM student)", schema);
    CHECK(nested.entries.size() == 1);
    CHECK(nested.entries.at({"student", "age"}).roles ==
          RoleSet({Role::Selected, Role::Condition}));

    // Self-join through aliases on the self-referencing table.
    SchemaLink self_join = extract_ground_truth(
        "SELECT T1.name FROM employee AS T1 JOIN employee AS T2 ON T1.manager_id = T2.emp_id "
        "WHERE T2.salary < T1.salary",
        schema);
    CHECK(self_join.entries.at({"employee", "manager_id"}).roles == RoleSet({Role::Join}));
    CHECK(self_join.entries.at({"employee", "emp_id"}).roles == RoleSet({Role::Join}));
    CHECK(self_join.entries.at({"employee", "salary"}).roles == RoleSet({Role::Condition}));

    // The self-referencing DDL round-trips too.
    CHECK(read_ddl(render_ddl(schema), schema.db_id).tables.size() == 4);

    SchemaLink except_link = extract_ground_truth(
        "SELECT stuid FROM student EXCEPT SELECT T1.stuid FROM student AS T1 "
        "JOIN has_pet AS T2 ON T1.stuid = T2.stuid JOIN pets AS T3 ON T2.petid = T3.petid "
        "WHERE T3.pettype = 'cat'",
        schema);
    CHECK(except_link.entries.at({"student", "stuid"}).roles ==
          RoleSet({Role::Selected, Role::Join}));
}

TEST_CASE("bird-layout rows use the SQL key and numeric question ids") {
    auto catalog = fixture_catalog();
    std::string dataset = R"([
        {"question_id": 1500, "db_id": "concert_singer", "question": "names",
         "SQL": "SELECT name FROM singer", "evidence": "ignored"}
    ])";
    ExtractionResult result = extract_corpus_from_json(dataset, catalog);
    REQUIRE(result.examples.size() == 1);
    CHECK(result.examples[0].question_id == "1500");
    CHECK(result.examples[0].link.contains({"singer", "name"}));
}

TEST_CASE("the parser only ever fails by typed exception") {
    DatabaseSchema schema = generator_schema();
    SplitMix64 rng(0xF0552);
    const std::string alphabet = "SELECT FROM WHERE ORDER BY a_name beta ( ) , . * = ' 0 <legal>";
    for (int trial = 0; trial < 3000; ++trial) {
        std::size_t length = 1 + rng.next_below(60);
        std::string text;
        for (std::size_t i = 0; i < length; ++i) {
            text.push_back(alphabet[rng.next_below(alphabet.size())]);
        }
        try {
            extract_ground_truth(text, schema);
        } catch (const ParseError&) {
        } catch (const IntegrityError&) {
        } catch (const ValidationError&) {
        }
    }
    CHECK(true);  // reaching here means no crash and no foreign exception
}

TEST_CASE("mutated template queries fail cleanly or parse") {
    DatabaseSchema schema = generator_schema();
    SplitMix64 rng(0xF0553);
    for (int trial = 0; trial < 2000; ++trial) {
        TemplateCase tc = make_template_case(rng, schema);
        std::string text = tc.sql;
        // Drop, duplicate, or clobber one character.
        std::size_t pos = rng.next_below(text.size());
        switch (rng.next_below(3)) {
            case 0: text.erase(pos, 1); break;
            case 1: text.insert(pos, 1, text[pos]); break;
            default: text[pos] = "(),.*'x5"[rng.next_below(8)]; break;
        }
        try {
            extract_ground_truth(text, schema);
        } catch (const ParseError&) {
        } catch (const IntegrityError&) {
        } catch (const ValidationError&) {
        }
    }
    CHECK(true);
}

TEST_CASE("corpus extraction collects per-row failures") {
    auto catalog = fixture_catalog();
    std::string dataset = R"([
        {"db_id": "concert_singer", "question": "ok", "query": "SELECT name FROM singer"},
        {"db_id": "concert_singer", "question": "bad", "query": "SELEC name FROM singer"}
    ])";
    ExtractionResult result = extract_corpus_from_json(dataset, catalog);
    CHECK(result.report.total_rows == 2);
    CHECK(result.report.extracted == 1);
    REQUIRE(result.examples.size() == 1);
    REQUIRE(result.report.failures.size() == 1);
    CHECK(result.report.failures[0].row_index == 1);
    CHECK(result.report.failures[0].question_id == "1");
}

TEST_CASE("fixture corpus extracts fully, validates, and is deterministic") {
    auto catalog = fixture_catalog();
    std::string dataset = read_file(fixture_path("dataset_fixture.json"));
    ExtractionResult first = extract_corpus_from_json(dataset, catalog);
    CHECK(first.report.failures.empty());
    CHECK(first.report.extracted == first.report.total_rows);

    for (const LabeledExample& example : first.examples) {
        const DatabaseSchema& schema = schema_by_id(catalog, example.db_id);
        for (const auto& [qc, entry] : example.link.entries) {
            CHECK_MESSAGE(schema.has_column(qc), "missing ", qc.to_string());
        }
        CHECK_FALSE(example.link.entries.empty());
    }

    ExtractionResult second = extract_corpus_from_json(dataset, catalog);
    REQUIRE(second.examples.size() == first.examples.size());
    std::string lines_a, lines_b;
    for (const LabeledExample& e : first.examples) lines_a += link_to_json_line(e.link) + "\n";
    for (const LabeledExample& e : second.examples) lines_b += link_to_json_line(e.link) + "\n";
    CHECK(lines_a == lines_b);
}

TEST_CASE("diff_links reports direction and role mismatches") {
    SchemaLink a;
    a.question_id = "q";
    a.db_id = "small_bank_1";
    a.entries[{"accounts", "customer_id"}].roles = roles({Role::Selected, Role::Group});

    SchemaLink b = a;
    b.entries[{"customers", "customer_id"}] = LinkEntry{};  // annotation adds an unneeded table

    CHECK(diff_links(a, a).empty());

    LinkDiff diff = diff_links(a, b);
    CHECK(diff.only_in_a.empty());
    REQUIRE(diff.only_in_b.size() == 1);
    CHECK(diff.only_in_b[0] == QualifiedColumn{"customers", "customer_id"});
    CHECK(diff.role_mismatches.empty());

    // a subset of b: only_in_b is exactly b minus a.
    SchemaLink bigger = b;
    bigger.entries[{"accounts", "balance"}].roles = roles({Role::Order});
    LinkDiff superset = diff_links(a, bigger);
    CHECK(superset.only_in_b.size() == 2);

    SchemaLink other_db;
    other_db.db_id = "different";
    CHECK_THROWS_AS(diff_links(a, other_db), ValidationError);

    SchemaLink role_change = a;
    role_change.entries[{"accounts", "customer_id"}].roles = roles({Role::Selected});
    LinkDiff mismatch = diff_links(a, role_change);
    REQUIRE(mismatch.role_mismatches.size() == 1);
    CHECK(mismatch.role_mismatches[0].in_a == roles({Role::Selected, Role::Group}));
    CHECK(mismatch.role_mismatches[0].in_b == roles({Role::Selected}));
}

TEST_CASE("link lines round-trip") {
    DatabaseSchema schema = generator_schema();
    SplitMix64 rng(99);
    for (int i = 0; i < 50; ++i) {
        TemplateCase tc = make_template_case(rng, schema);
        SchemaLink link = extract_ground_truth(tc.sql, schema, std::to_string(i));
        SchemaLink back = link_from_json_line(link_to_json_line(link));
        CHECK(back == link);
    }
}

TEST_SUITE_END();
