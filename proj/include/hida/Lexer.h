//===- Lexer.h - Shared tokenizer for kernel and IR text ------*- C++ -*-===//

#pragma once

#include "hida/Diagnostics.h"

#include <cctype>
#include <cstdint>
#include <string>

namespace hida {

enum class Tok {
  Eof,
  Ident,
  Int,
  Float,
  Punct,    // single character in text[0]
  DotDot,   // ..
  PlusEq,   // +=
  Arrow,    // ->
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  std::int64_t intValue = 0;
  double floatValue = 0;
  int line = 1;
  int col = 1;
};

// Hand-rolled scanner: identifiers, integer and floating literals, a handful
// of multi-char operators, single-char punctuation. `//` starts a comment.
class Lexer {
public:
  explicit Lexer(const std::string &src) : src(src) { advance(); }

  const Token &peek() const { return tok; }

  Token next() {
    Token t = tok;
    advance();
    return t;
  }

  bool isPunct(char c) const {
    return tok.kind == Tok::Punct && tok.text[0] == c;
  }
  bool isIdent(const char *kw) const {
    return tok.kind == Tok::Ident && tok.text == kw;
  }

  Token expectIdent(const char *what) {
    if (tok.kind != Tok::Ident)
      fail(std::string("expected ") + what);
    return next();
  }
  Token expectPunct(char c) {
    if (!isPunct(c))
      fail(std::string("expected '") + c + "'");
    return next();
  }
  std::int64_t expectInt() {
    bool neg = false;
    if (isPunct('-')) {
      next();
      neg = true;
    }
    if (tok.kind != Tok::Int)
      fail("expected integer");
    std::int64_t v = next().intValue;
    return neg ? -v : v;
  }
  void expectKeyword(const char *kw) {
    if (!isIdent(kw))
      fail(std::string("expected '") + kw + "'");
    next();
  }

  [[noreturn]] void fail(const std::string &msg) const {
    std::string got = tok.kind == Tok::Eof ? "end of input" : "'" + tok.text + "'";
    throw ParseError(tok.line, tok.col, msg + ", got " + got);
  }

private:
  void advance() {
    skipSpace();
    tok = Token{};
    tok.line = line;
    tok.col = col;
    if (pos >= src.size()) {
      tok.kind = Tok::Eof;
      return;
    }
    char c = src[pos];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos;
      while (pos < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[pos])) ||
              src[pos] == '_'))
        bump();
      tok.kind = Tok::Ident;
      tok.text = src.substr(start, pos - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      lexNumber();
      return;
    }
    if (c == '.' && pos + 1 < src.size() && src[pos + 1] == '.') {
      bump();
      bump();
      tok.kind = Tok::DotDot;
      tok.text = "..";
      return;
    }
    if (c == '+' && pos + 1 < src.size() && src[pos + 1] == '=') {
      bump();
      bump();
      tok.kind = Tok::PlusEq;
      tok.text = "+=";
      return;
    }
    if (c == '-' && pos + 1 < src.size() && src[pos + 1] == '>') {
      bump();
      bump();
      tok.kind = Tok::Arrow;
      tok.text = "->";
      return;
    }
    bump();
    tok.kind = Tok::Punct;
    tok.text = std::string(1, c);
  }

  void lexNumber() {
    size_t start = pos;
    bool isFloat = false;
    while (pos < src.size() &&
           std::isdigit(static_cast<unsigned char>(src[pos])))
      bump();
    if (pos < src.size() && src[pos] == '.' &&
        !(pos + 1 < src.size() && src[pos + 1] == '.')) {
      isFloat = true;
      bump();
      while (pos < src.size() &&
             std::isdigit(static_cast<unsigned char>(src[pos])))
        bump();
    }
    if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
      size_t savePos = pos;
      int saveCol = col;
      bump();
      if (pos < src.size() && (src[pos] == '+' || src[pos] == '-'))
        bump();
      if (pos < src.size() &&
          std::isdigit(static_cast<unsigned char>(src[pos]))) {
        isFloat = true;
        while (pos < src.size() &&
               std::isdigit(static_cast<unsigned char>(src[pos])))
          bump();
      } else { // bare 'e' belongs to the next token
        pos = savePos;
        col = saveCol;
      }
    }
    tok.text = src.substr(start, pos - start);
    if (isFloat) {
      tok.kind = Tok::Float;
      tok.floatValue = std::stod(tok.text);
    } else {
      tok.kind = Tok::Int;
      tok.intValue = std::stoll(tok.text);
      tok.floatValue = double(tok.intValue);
    }
  }

  void skipSpace() {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
        while (pos < src.size() && src[pos] != '\n')
          bump();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  std::string src;
  size_t pos = 0;
  int line = 1;
  int col = 1;
  Token tok;
};

} // namespace hida
