#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowbench {

// Base of every domain error raised by the library. The CLI maps these to
// exit status 1; anything else escaping a subcommand is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FLOWBENCH_DEFINE_ERROR(Name)           \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what)     \
        : Error(std::string(#Name ": ") + what) {} \
  }

FLOWBENCH_DEFINE_ERROR(InvalidArgument);
FLOWBENCH_DEFINE_ERROR(DimMismatch);
FLOWBENCH_DEFINE_ERROR(NotPositiveDefinite);
FLOWBENCH_DEFINE_ERROR(NoConvergence);
FLOWBENCH_DEFINE_ERROR(NonFiniteActivation);
FLOWBENCH_DEFINE_ERROR(MissingLabelColumn);
FLOWBENCH_DEFINE_ERROR(EmptyDataset);
FLOWBENCH_DEFINE_ERROR(TooFewNormals);
FLOWBENCH_DEFINE_ERROR(SchemaVersionMismatch);
FLOWBENCH_DEFINE_ERROR(CorruptFile);
FLOWBENCH_DEFINE_ERROR(IoError);
FLOWBENCH_DEFINE_ERROR(SingleClass);
FLOWBENCH_DEFINE_ERROR(IncompleteMatrix);
FLOWBENCH_DEFINE_ERROR(NotEnoughRows);
FLOWBENCH_DEFINE_ERROR(NoCompetitors);
FLOWBENCH_DEFINE_ERROR(EmptyPool);
FLOWBENCH_DEFINE_ERROR(KTooLarge);
FLOWBENCH_DEFINE_ERROR(DegenerateData);
FLOWBENCH_DEFINE_ERROR(RhoOutOfRange);
FLOWBENCH_DEFINE_ERROR(DegenerateComponent);
FLOWBENCH_DEFINE_ERROR(TOutOfRange);

#undef FLOWBENCH_DEFINE_ERROR

// Non-numeric or out-of-domain cell in a CSV file. Rows are 1-based data rows
// (the header is row 0), columns are 0-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& detail)
      : Error("ParseError: row " + std::to_string(row) + ", column " +
              std::to_string(col) + ": " + detail),
        row_(row),
        col_(col) {}

  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

}  // namespace flowbench
