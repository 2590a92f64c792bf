// Parse and run JavaScript snippets for snipcheck.
//
//   node js_helper.js serve        JSON-lines parse server on stdin/stdout
//   node js_helper.js run FILE     evaluate FILE in a fresh context, print one JSON result
'use strict';

const fs = require('fs');
const readline = require('readline');
const vm = require('vm');

function describe(err) {
  if (err !== null && typeof err === 'object' && typeof err.name === 'string') {
    return err.message ? `${err.name}: ${err.message}` : err.name;
  }
  return `Uncaught ${String(err)}`;
}

function parse(code) {
  new vm.Script(code, { filename: 'snippet.js' });
}

function serve() {
  const rl = readline.createInterface({ input: process.stdin, crlfDelay: Infinity, terminal: false });
  rl.on('line', (line) => {
    if (!line.trim()) return;
    const request = JSON.parse(line);
    let reply;
    try {
      parse(request.code);
      reply = { status: 'pass' };
    } catch (err) {
      reply = { status: 'fail', error: describe(err) };
    }
    process.stdout.write(JSON.stringify(reply) + '\n');
  });
}

function run(file) {
  const code = fs.readFileSync(file, 'utf8');
  const noop = () => {};
  const console = {};
  for (const k of ['log', 'info', 'warn', 'error', 'debug', 'trace', 'dir', 'table', 'assert', 'time', 'timeEnd', 'group', 'groupEnd']) {
    console[k] = noop;
  }
  let reply = { status: 'pass' };
  const finish = () => {
    fs.writeSync(1, JSON.stringify(reply) + '\n');
    process.exit(0);
  };
  // Promise jobs queued by the snippet run before the check below.
  process.on('unhandledRejection', (err) => {
    if (reply.status === 'pass') reply = { status: 'fail', error: describe(err) };
  });
  try {
    vm.runInNewContext(code, { console }, { filename: 'snippet.js' });
  } catch (err) {
    reply = { status: 'fail', error: describe(err) };
    finish();
  }
  setImmediate(() => setImmediate(finish));
}

const [mode, arg] = process.argv.slice(2);
if (mode === 'serve') {
  serve();
} else if (mode === 'run' && arg) {
  run(arg);
} else {
  process.stderr.write('usage: js_helper.js serve | run FILE\n');
  process.exit(2);
}
